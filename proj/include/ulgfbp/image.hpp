#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ulgfbp/errors.hpp"

namespace ulgfbp {

// Row-major 8-bit grayscale raster.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // size = width * height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 0 || h < 0) throw DimensionError("GrayImage: negative dimension");
    }

    bool empty() const { return width == 0 || height == 0; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Row-major real-valued raster.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    FloatImage() = default;
    FloatImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 0 || h < 0) throw DimensionError("FloatImage: negative dimension");
    }

    bool empty() const { return width == 0 || height == 0; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Row-major complex-valued raster (convolution responses).
struct ComplexImage {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> data;

    ComplexImage() = default;
    ComplexImage(int w, int h)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h) {
        if (w < 0 || h < 0) throw DimensionError("ComplexImage: negative dimension");
    }

    bool empty() const { return width == 0 || height == 0; }
    std::complex<double> at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::complex<double>& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Interleaved 8-bit RGB raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // size = width * height * 3, pixel order R,G,B

    RgbImage() = default;
    RgbImage(int w, int h)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {
        if (w < 0 || h < 0) throw DimensionError("RgbImage: negative dimension");
    }

    bool empty() const { return width == 0 || height == 0; }
    const std::uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    std::uint8_t* pixel(int x, int y) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

} // namespace ulgfbp
