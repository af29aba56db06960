#pragma once

#include <vector>

#include "ulgfbp/image.hpp"

namespace ulgfbp {

// Complex filter parameters: radial frequency omega (rad/pixel), orientation
// theta, Gaussian width delta = pi / omega.
struct GaborParams {
    double omega = 0.0;
    double theta = 0.0;
    double delta = 0.0;

    GaborParams() = default;
    GaborParams(double omega_, double theta_);
};

// Square complex kernel of odd side 2*radius + 1, sampled on integer offsets.
struct ComplexKernel {
    int radius = 0;
    std::vector<std::complex<double>> values; // row-major, (2r+1)^2
    GaborParams params;

    int side() const { return 2 * radius + 1; }
    std::complex<double> at(int dx, int dy) const {
        return values[static_cast<std::size_t>(dy + radius) * side() + (dx + radius)];
    }
};

// Three scales x two directions, scale-major: (s0,d0),(s0,d1),(s1,d0),...
struct GaborBank {
    std::vector<ComplexKernel> kernels;
};

struct GaborMagnitudeImage {
    FloatImage image;
    GaborParams params;
};

// Gaussian-windowed complex carrier with DC compensation, truncated at the
// given radius, then rebalanced so the discrete samples sum to exactly zero.
ComplexKernel gabor_kernel(const GaborParams& params, int radius);

// Kernel radius per bank entry is ceil(3 * delta).
GaborBank build_filter_bank(const std::vector<double>& omegas, const std::vector<double>& thetas);

enum class ConvMethod { Auto, Direct, Fft };

// Full-support convolution with symmetric reflect padding (edge included);
// output dimensions equal input dimensions. The FFT path matches the direct
// path to well under 1e-6 relative error.
ComplexImage apply_gabor(const FloatImage& img, const ComplexKernel& kernel,
                         ConvMethod method = ConvMethod::Auto);

GaborMagnitudeImage magnitude(const ComplexImage& response, const GaborParams& params);

std::vector<double> default_omegas(); // {pi/2, pi/4, pi/8}
std::vector<double> default_thetas(); // {0, pi/2}

} // namespace ulgfbp
