#include "ulgfbp/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace ulgfbp {

GrayImage to_grayscale(const RgbImage& rgb) {
    if (rgb.empty()) throw DimensionError("to_grayscale: empty image");
    GrayImage out(rgb.width, rgb.height);
    const std::uint8_t* p = rgb.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i, p += 3) {
        double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        long v = std::lround(y);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    return out;
}

namespace {

// Shared bilinear core. Pixel-center alignment: destination center (xd + 0.5)
// maps to source coordinate (xd + 0.5) * sw / dw - 0.5, clamped to the grid.
template <typename Src, typename Dst, typename Round>
void resize_core(const Src& in, Dst& out, Round round_fn) {
    const int sw = in.width, sh = in.height;
    const int dw = out.width, dh = out.height;
    const double sx = static_cast<double>(sw) / dw;
    const double sy = static_cast<double>(sh) / dh;
    for (int yd = 0; yd < dh; ++yd) {
        double fy = (yd + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = fy - y0;
        for (int xd = 0; xd < dw; ++xd) {
            double fx = (xd + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = fx - x0;
            const double v = (1.0 - wy) * ((1.0 - wx) * in.at(x0, y0) + wx * in.at(x1, y0)) +
                             wy * ((1.0 - wx) * in.at(x0, y1) + wx * in.at(x1, y1));
            out.at(xd, yd) = round_fn(v);
        }
    }
}

} // namespace

GrayImage resize_bilinear(const GrayImage& img, int w, int h) {
    if (img.empty()) throw DimensionError("resize_bilinear: empty image");
    if (w < 1 || h < 1) throw ArgumentError("resize_bilinear: target dimensions must be >= 1");
    if (w == img.width && h == img.height) return img;
    GrayImage out(w, h);
    resize_core(img, out, [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    });
    return out;
}

FloatImage resize_bilinear(const FloatImage& img, int w, int h) {
    if (img.empty()) throw DimensionError("resize_bilinear: empty image");
    if (w < 1 || h < 1) throw ArgumentError("resize_bilinear: target dimensions must be >= 1");
    if (w == img.width && h == img.height) return img;
    FloatImage out(w, h);
    resize_core(img, out, [](double v) { return v; });
    return out;
}

GrayImage equalize_histogram(const GrayImage& img) {
    if (img.empty()) throw DimensionError("equalize_histogram: empty image");
    std::array<std::size_t, 256> hist{};
    for (std::uint8_t v : img.data) ++hist[v];
    const double total = static_cast<double>(img.data.size());
    std::array<std::uint8_t, 256> lut;
    std::size_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        double mapped = std::floor(255.0 * (static_cast<double>(cum) / total));
        lut[v] = static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
    }
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = lut[img.data[i]];
    return out;
}

FloatImage normalize_zscore(const GrayImage& img) {
    if (img.empty()) throw DimensionError("normalize_zscore: empty image");
    const double n = static_cast<double>(img.data.size());
    double sum = 0.0;
    for (std::uint8_t v : img.data) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (std::uint8_t v : img.data) {
        const double d = v - mean;
        ss += d * d;
    }
    const double stddev = std::sqrt(ss / n); // population std
    FloatImage out(img.width, img.height);
    if (stddev < 1e-12) return out; // constant input -> all zeros
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = (img.data[i] - mean) / stddev;
    return out;
}

GrayImage rotate_quarter(const GrayImage& img, int quarter_turns) {
    if (img.empty()) throw DimensionError("rotate_quarter: empty image");
    const int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return img;
    const int w = img.width, h = img.height;
    if (q == 2) {
        GrayImage out(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(x, y) = img.at(w - 1 - x, h - 1 - y);
        return out;
    }
    GrayImage out(h, w);
    if (q == 1) { // 90 clockwise: top row of output is the left column bottom-up
        for (int y = 0; y < w; ++y)
            for (int x = 0; x < h; ++x) out.at(x, y) = img.at(y, h - 1 - x);
    } else { // 270 clockwise
        for (int y = 0; y < w; ++y)
            for (int x = 0; x < h; ++x) out.at(x, y) = img.at(w - 1 - y, x);
    }
    return out;
}

} // namespace ulgfbp
