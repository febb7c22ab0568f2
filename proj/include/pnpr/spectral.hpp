#pragma once

// Closed-form frequency-domain solutions of the quadratic data subproblem:
// a pointwise division for deblurring and a block-diagonalized solve for
// super-resolution. Both return real images after checking that the inverse
// transform's imaginary residue is negligible.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pnpr/degrade.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/fft.hpp"
#include "pnpr/image.hpp"
#include "pnpr/kernel.hpp"

namespace pnpr {

// Transfer function of a kernel on a fixed grid.
struct Otf {
    int height = 0, width = 0;
    CArray v;  // row-major, height*width bins

    const cplx& at(int i, int j) const { return v[static_cast<size_t>(i) * width + j]; }
};

// Weights of the data subproblem. Sigmas are on the 0-255 scale; only the
// ratio sigma_s/sigma_k enters the solvers, so the scale cancels.
struct FidelityWeights {
    double lambda = 1.0;
    double sigma_s = 1.0;
    double sigma_k = 1.0;

    void validate() const {
        if (!(lambda > 0.0) || !(sigma_s > 0.0) || !(sigma_k > 0.0))
            throw DataError("FidelityWeights: lambda, sigma_s, sigma_k must be > 0");
    }
};

// Embeds the kernel with its centre element wrapped to index (0,0), then
// transforms. With this convention, pointwise multiplication by the Otf in
// frequency equals convolve_circular in space.
inline Otf psf_to_otf(const Kernel& k, int h, int w) {
    k.validate("psf_to_otf");
    if (k.kh > h || k.kw > w) throw DataError("psf_to_otf: kernel larger than target grid");
    const int cu = k.kh / 2, cv = k.kw / 2;
    CArray embedded(static_cast<size_t>(h) * w, cplx(0.0, 0.0));
    for (int u = 0; u < k.kh; ++u) {
        const int i = (((u - cu) % h) + h) % h;
        for (int v = 0; v < k.kw; ++v) {
            const int j = (((v - cv) % w) + w) % w;
            embedded[static_cast<size_t>(i) * w + j] += k.at(u, v);
        }
    }
    Otf out;
    out.height = h;
    out.width = w;
    out.v = fft2(h, w, embedded);
    return out;
}

namespace detail {

// Takes the real part of an inverse transform after verifying the imaginary
// residue is below 1e-6 of the solution's sup-norm.
inline void take_real_checked(const CArray& x, double* dst, size_t n, const char* where) {
    double max_re = 0.0, max_im = 0.0;
    for (size_t i = 0; i < n; ++i) {
        max_re = std::max(max_re, std::abs(x[i].real()));
        max_im = std::max(max_im, std::abs(x[i].imag()));
    }
    if (max_im > 1e-6 * std::max(max_re, 1e-30))
        throw NumericError(std::string(where) + ": imaginary residue " + std::to_string(max_im) +
                           " exceeds tolerance");
    for (size_t i = 0; i < n; ++i) dst[i] = x[i].real();
}

}  // namespace detail

// x = IFFT( (sk^2 conj(A)Y + l ss^2 V) / (sk^2 |A|^2 + l ss^2) ), per channel.
inline Image deblur_x_step(const Image& y, const Image& v, const Otf& otf,
                           const FidelityWeights& w) {
    w.validate();
    if (!y.same_shape(v)) throw DataError("deblur_x_step: y and v differ in shape");
    if (otf.height != y.height || otf.width != y.width)
        throw DataError("deblur_x_step: otf sized for a different grid");
    const int h = y.height, wd = y.width;
    const size_t n = static_cast<size_t>(h) * wd;
    const double sk2 = w.sigma_k * w.sigma_k;
    const double ls2 = w.lambda * w.sigma_s * w.sigma_s;

    Image x(h, wd, y.channels, 0.0, y.space);
    CArray num(n), spatial(n);
    for (int c = 0; c < y.channels; ++c) {
        CArray yf = fft2_real(h, wd, y.plane(c));
        CArray vf = fft2_real(h, wd, v.plane(c));
        for (size_t i = 0; i < n; ++i) {
            const cplx a = otf.v[i];
            const double den = sk2 * std::norm(a) + ls2;
            num[i] = (sk2 * std::conj(a) * yf[i] + ls2 * vf[i]) / den;
        }
        ifft2_into(h, wd, num.data(), spatial.data());
        detail::take_real_checked(spatial, x.plane(c), n, "deblur_x_step");
    }
    return x;
}

// Mean over the s x s aliasing sub-arrays: out(i,j) = (1/s^2) sum_{a,b}
// freq(i + a*H/s, j + b*W/s).
inline CArray block_downsample_avg(const CArray& freq, int h, int w, int s) {
    if (s < 1) throw DataError("block_downsample_avg: scale must be >= 1");
    if (freq.size() != static_cast<size_t>(h) * w)
        throw DataError("block_downsample_avg: size mismatch");
    if (h % s != 0 || w % s != 0)
        throw DataError("block_downsample_avg: dimensions not divisible by scale");
    if (s == 1) return freq;
    const int hs = h / s, ws = w / s;
    CArray out(static_cast<size_t>(hs) * ws, cplx(0.0, 0.0));
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b)
            for (int i = 0; i < hs; ++i)
                for (int j = 0; j < ws; ++j)
                    out[static_cast<size_t>(i) * ws + j] +=
                        freq[static_cast<size_t>(i + a * hs) * w + (j + b * ws)];
    const double inv = 1.0 / (static_cast<double>(s) * s);
    for (auto& z : out) z *= inv;
    return out;
}

// Multiplies each aliasing sub-array of freq elementwise by small.
inline CArray block_distribute_mul(const CArray& freq, int h, int w, const CArray& small,
                                   int s) {
    if (s < 1) throw DataError("block_distribute_mul: scale must be >= 1");
    if (freq.size() != static_cast<size_t>(h) * w)
        throw DataError("block_distribute_mul: size mismatch");
    if (h % s != 0 || w % s != 0)
        throw DataError("block_distribute_mul: dimensions not divisible by scale");
    const int hs = h / s, ws = w / s;
    if (small.size() != static_cast<size_t>(hs) * ws)
        throw DataError("block_distribute_mul: small array size mismatch");
    CArray out(freq.size());
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b)
            for (int i = 0; i < hs; ++i)
                for (int j = 0; j < ws; ++j) {
                    const size_t big = static_cast<size_t>(i + a * hs) * w + (j + b * ws);
                    out[big] = freq[big] * small[static_cast<size_t>(i) * ws + j];
                }
    return out;
}

// Exact solve of the super-resolution normal equations
//   ((SA)^T(SA) + alpha I) x = (SA)^T y + alpha v
// in frequency, where A is circular blur and S keeps every s-th sample.
inline Image sisr_x_step(const Image& y, const Image& v, const Otf& otf, double alpha) {
    if (!(alpha > 0.0)) throw DataError("sisr_x_step: alpha must be > 0");
    if (v.channels != y.channels) throw DataError("sisr_x_step: channel mismatch");
    if (otf.height != v.height || otf.width != v.width)
        throw DataError("sisr_x_step: otf sized for a different grid");
    if (v.height % y.height != 0 || v.width % y.width != 0)
        throw DataError("sisr_x_step: high-res dims not a multiple of low-res dims");
    const int s = v.height / y.height;
    if (s < 1 || v.width / y.width != s || v.height != s * y.height || v.width != s * y.width)
        throw DataError("sisr_x_step: inconsistent scale between y and v");

    const int h = v.height, w = v.width;
    const size_t n = static_cast<size_t>(h) * w;
    const int hs = h / s, ws = w / s;
    const size_t ns = static_cast<size_t>(hs) * ws;

    // conj(A) and the shared denominator (conj(A) A) block-averaged + alpha.
    CArray conj_a(n), a2(n);
    for (size_t i = 0; i < n; ++i) {
        conj_a[i] = std::conj(otf.v[i]);
        a2[i] = std::norm(otf.v[i]);
    }
    CArray den = block_downsample_avg(a2, h, w, s);
    for (auto& z : den) z += alpha;

    const Image yup = upsample_zero(y, s);
    Image x(h, w, v.channels, 0.0, v.space);
    CArray d(n), ad(n), spatial(n);
    for (int c = 0; c < v.channels; ++c) {
        CArray yf = fft2_real(h, w, yup.plane(c));
        CArray vf = fft2_real(h, w, v.plane(c));
        for (size_t i = 0; i < n; ++i) {
            d[i] = conj_a[i] * yf[i] + alpha * vf[i];
            ad[i] = otf.v[i] * d[i];
        }
        CArray t = block_downsample_avg(ad, h, w, s);
        for (size_t i = 0; i < ns; ++i) t[i] /= den[i];
        const CArray back = block_distribute_mul(conj_a, h, w, t, s);
        for (size_t i = 0; i < n; ++i) d[i] = (d[i] - back[i]) / alpha;
        ifft2_into(h, w, d.data(), spatial.data());
        detail::take_real_checked(spatial, x.plane(c), n, "sisr_x_step");
    }
    return x;
}

}  // namespace pnpr
