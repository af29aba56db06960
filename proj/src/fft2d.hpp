#pragma once

#include <complex>
#include <vector>

namespace ulgfbp::detail {

// In-place 2-D complex DFT over a row-major h x w buffer, backed by FFTW with
// deterministic (estimate-only) planning. Inverse is unnormalized; callers
// divide by h * w.
void fft2d(std::vector<std::complex<double>>& data, int h, int w, bool inverse);

} // namespace ulgfbp::detail
