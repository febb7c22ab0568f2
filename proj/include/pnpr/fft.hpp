#pragma once

// Thin wrapper over FFTW's complex 2-D transforms with a process-wide plan
// cache. Plans are created with FFTW_ESTIMATE so planning never touches the
// input buffers and results do not depend on measurement timing, and with
// FFTW_UNALIGNED so cached plans can be re-executed on any heap buffer.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "pnpr/errors.hpp"

namespace pnpr {

using cplx = std::complex<double>;
using CArray = std::vector<cplx>;

namespace detail {

class FftPlanCache {
  public:
    // Plan creation is serialized; executing a cached plan through the
    // new-array interface is safe from multiple threads.
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        const auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> a(static_cast<size_t>(h) * w), b(a.size());
        fftw_plan p = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(a.data()),
                                       reinterpret_cast<fftw_complex*>(b.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw NumericError("fft: plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

    ~FftPlanCache() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

  private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline FftPlanCache& plan_cache() {
    static FftPlanCache cache;
    return cache;
}

}  // namespace detail

// Out-of-place forward DFT; in and out must be distinct h*w buffers.
inline void fft2_into(int h, int w, const cplx* in, cplx* out) {
    fftw_plan p = detail::plan_cache().get(h, w, FFTW_FORWARD);
    // fftw_execute_dft takes a non-const input pointer but leaves the data
    // untouched for an out-of-place c2c transform.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

// Out-of-place inverse DFT, normalized by 1/(h*w).
inline void ifft2_into(int h, int w, const cplx* in, cplx* out) {
    fftw_plan p = detail::plan_cache().get(h, w, FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / (static_cast<double>(h) * w);
    const size_t n = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < n; ++i) out[i] *= scale;
}

inline CArray fft2(int h, int w, const CArray& in) {
    if (in.size() != static_cast<size_t>(h) * w) throw DataError("fft2: size mismatch");
    CArray out(in.size());
    fft2_into(h, w, in.data(), out.data());
    return out;
}

inline CArray ifft2(int h, int w, const CArray& in) {
    if (in.size() != static_cast<size_t>(h) * w) throw DataError("ifft2: size mismatch");
    CArray out(in.size());
    ifft2_into(h, w, in.data(), out.data());
    return out;
}

inline CArray fft2_real(int h, int w, const double* plane) {
    CArray in(static_cast<size_t>(h) * w);
    for (size_t i = 0; i < in.size(); ++i) in[i] = plane[i];
    CArray out(in.size());
    fft2_into(h, w, in.data(), out.data());
    return out;
}

}  // namespace pnpr
