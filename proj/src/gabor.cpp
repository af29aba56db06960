#include "ulgfbp/gabor.hpp"

#include <algorithm>
#include <cmath>

#include "fft2d.hpp"
#include "ulgfbp/errors.hpp"

namespace ulgfbp {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

GaborParams::GaborParams(double omega_, double theta_) : omega(omega_), theta(theta_) {
    if (!(omega_ > 0.0)) throw ArgumentError("GaborParams: omega must be positive");
    delta = kPi / omega_;
}

ComplexKernel gabor_kernel(const GaborParams& params, int radius) {
    if (radius < 1) throw ArgumentError("gabor_kernel: radius must be >= 1");
    ComplexKernel k;
    k.radius = radius;
    k.params = params;
    const int side = k.side();
    k.values.resize(static_cast<std::size_t>(side) * side);

    const double delta2 = params.delta * params.delta;
    const double norm = 1.0 / (2.0 * kPi * delta2);
    const double dc = std::exp(-(params.omega * params.omega * delta2) / 2.0);
    const double ct = std::cos(params.theta), st = std::sin(params.theta);

    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double xp = dx * ct + dy * st;
            const double yp = -dx * st + dy * ct;
            const double env = norm * std::exp(-(xp * xp + yp * yp) / (2.0 * delta2));
            const std::complex<double> carrier{std::cos(params.omega * xp) - dc,
                                               std::sin(params.omega * xp)};
            k.values[static_cast<std::size_t>(dy + radius) * side + (dx + radius)] = env * carrier;
        }
    }

    // Truncation leaves a small real DC residue (the imaginary part sums to
    // zero by symmetry). Rebalance so the discrete kernel sums to exactly 0.
    double residual = 0.0;
    for (const auto& v : k.values) residual += v.real();
    const double shift = residual / static_cast<double>(k.values.size());
    for (auto& v : k.values) v -= shift;
    return k;
}

GaborBank build_filter_bank(const std::vector<double>& omegas, const std::vector<double>& thetas) {
    if (omegas.size() != 3) throw ArgumentError("build_filter_bank: exactly 3 scales required");
    if (thetas.size() != 2) throw ArgumentError("build_filter_bank: exactly 2 directions required");
    for (std::size_t i = 1; i < omegas.size(); ++i)
        if (!(omegas[i] < omegas[i - 1]))
            throw ArgumentError("build_filter_bank: omegas must be strictly decreasing");
    if (thetas[0] == thetas[1]) throw ArgumentError("build_filter_bank: directions must be distinct");
    for (double t : thetas)
        if (t < 0.0 || t >= kPi) throw ArgumentError("build_filter_bank: theta must lie in [0, pi)");

    GaborBank bank;
    bank.kernels.reserve(6);
    for (double omega : omegas) {
        for (double theta : thetas) {
            GaborParams p(omega, theta);
            const int radius = static_cast<int>(std::ceil(3.0 * p.delta));
            bank.kernels.push_back(gabor_kernel(p, radius));
        }
    }
    return bank;
}

namespace {

// Symmetric reflection with the edge pixel included; total for any n >= 1.
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

ComplexImage convolve_direct(const FloatImage& img, const ComplexKernel& kernel) {
    const int w = img.width, h = img.height, r = kernel.radius;
    ComplexImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double re = 0.0, im = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = reflect_index(y - dy, h);
                const double* src_row = img.data.data() + static_cast<std::size_t>(sy) * w;
                const std::complex<double>* k_row =
                    kernel.values.data() + static_cast<std::size_t>(dy + r) * kernel.side();
                for (int dx = -r; dx <= r; ++dx) {
                    const double v = src_row[reflect_index(x - dx, w)];
                    const std::complex<double> kv = k_row[dx + r];
                    re += kv.real() * v;
                    im += kv.imag() * v;
                }
            }
            out.at(x, y) = {re, im};
        }
    }
    return out;
}

// Smallest 2^a * 3^b * 5^c >= n.
int next_fast_size(int n) {
    for (int s = n;; ++s) {
        int m = s;
        while (m % 2 == 0) m /= 2;
        while (m % 3 == 0) m /= 3;
        while (m % 5 == 0) m /= 5;
        if (m == 1) return s;
    }
}

ComplexImage convolve_fft(const FloatImage& img, const ComplexKernel& kernel) {
    const int w = img.width, h = img.height, r = kernel.radius;
    const int side = kernel.side();
    const int ph = h + 2 * r, pw = w + 2 * r;
    const int fh = next_fast_size(ph + side - 1);
    const int fw = next_fast_size(pw + side - 1);
    const std::size_t n = static_cast<std::size_t>(fh) * fw;

    std::vector<std::complex<double>> a(n), b(n);
    for (int y = 0; y < ph; ++y) {
        const int sy = reflect_index(y - r, h);
        for (int x = 0; x < pw; ++x)
            a[static_cast<std::size_t>(y) * fw + x] = img.at(reflect_index(x - r, w), sy);
    }
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            b[static_cast<std::size_t>(y) * fw + x] =
                kernel.values[static_cast<std::size_t>(y) * side + x];

    detail::fft2d(a, fh, fw, false);
    detail::fft2d(b, fh, fw, false);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= b[i] * scale;
    detail::fft2d(a, fh, fw, true);

    // Full linear convolution of padded image and kernel; the spec window of
    // the original image sits at offset (2r, 2r).
    ComplexImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = a[static_cast<std::size_t>(y + 2 * r) * fw + (x + 2 * r)];
    return out;
}

} // namespace

ComplexImage apply_gabor(const FloatImage& img, const ComplexKernel& kernel, ConvMethod method) {
    if (img.empty()) throw DimensionError("apply_gabor: empty image");
    if (method == ConvMethod::Auto) {
        const double direct_cost = static_cast<double>(img.width) * img.height *
                                   kernel.side() * kernel.side();
        method = direct_cost <= 250000.0 ? ConvMethod::Direct : ConvMethod::Fft;
    }
    return method == ConvMethod::Direct ? convolve_direct(img, kernel) : convolve_fft(img, kernel);
}

GaborMagnitudeImage magnitude(const ComplexImage& response, const GaborParams& params) {
    GaborMagnitudeImage out;
    out.params = params;
    out.image = FloatImage(response.width, response.height);
    for (std::size_t i = 0; i < response.data.size(); ++i)
        out.image.data[i] = std::abs(response.data[i]);
    return out;
}

std::vector<double> default_omegas() { return {kPi / 2.0, kPi / 4.0, kPi / 8.0}; }

std::vector<double> default_thetas() { return {0.0, kPi / 2.0}; }

} // namespace ulgfbp
