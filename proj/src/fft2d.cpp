#include "fft2d.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "ulgfbp/errors.hpp"

namespace ulgfbp::detail {

namespace {

// FFTW planning is not thread-safe; execution through the new-array interface
// is. Plans are created once per (h, w, direction) with FFTW_ESTIMATE so the
// chosen algorithm, and therefore the output bits, never depend on timing.
class PlanCache {
public:
    fftw_plan get(int h, int w, bool inverse) {
        std::lock_guard<std::mutex> lock(mu_);
        const Key key{h, w, inverse};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        fftw_complex* scratch = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
        if (!scratch) throw Error("fft2d: allocation failed");
        fftw_plan plan = fftw_plan_dft_2d(h, w, scratch, scratch,
                                          inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                          FFTW_ESTIMATE);
        fftw_free(scratch);
        if (!plan) throw Error("fft2d: planning failed");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    using Key = std::tuple<int, int, bool>;
    std::mutex mu_;
    std::map<Key, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

} // namespace

void fft2d(std::vector<std::complex<double>>& data, int h, int w, bool inverse) {
    if (h < 1 || w < 1 || data.size() != static_cast<std::size_t>(h) * w)
        throw ArgumentError("fft2d: buffer size does not match dimensions");
    fftw_plan plan = plan_cache().get(h, w, inverse);

    // New-array execution needs the same alignment the plan was made with.
    fftw_complex* buf = fftw_alloc_complex(data.size());
    if (!buf) throw Error("fft2d: allocation failed");
    for (std::size_t i = 0; i < data.size(); ++i) {
        buf[i][0] = data[i].real();
        buf[i][1] = data[i].imag();
    }
    fftw_execute_dft(plan, buf, buf);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = {buf[i][0], buf[i][1]};
    fftw_free(buf);
}

} // namespace ulgfbp::detail
