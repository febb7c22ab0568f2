#pragma once

// Quality metrics on [0,1] images: peak signal-to-noise ratio (joint MSE
// over all channels) and mean structural similarity with the standard
// 11x11 Gaussian window.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"

namespace pnpr {

// 10 log10(peak^2 / MSE); identical images give +infinity.
inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw DataError("psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

inline std::vector<double> ssim_window() {
    // 11x11 Gaussian, sigma 1.5, normalized to sum 1.
    std::vector<double> w(11 * 11);
    double sum = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            const double di = i - 5.0, dj = j - 5.0;
            w[static_cast<size_t>(i) * 11 + j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
            sum += w[static_cast<size_t>(i) * 11 + j];
        }
    for (auto& v : w) v /= sum;
    return w;
}

inline double ssim_plane(const double* a, const double* b, int h, int w, double peak) {
    static const std::vector<double> win = ssim_window();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    int count = 0;
    for (int i = 0; i + 11 <= h; ++i)
        for (int j = 0; j + 11 <= w; ++j) {
            double ma = 0.0, mb = 0.0;
            for (int u = 0; u < 11; ++u)
                for (int v = 0; v < 11; ++v) {
                    const double wk = win[static_cast<size_t>(u) * 11 + v];
                    ma += wk * a[static_cast<size_t>(i + u) * w + (j + v)];
                    mb += wk * b[static_cast<size_t>(i + u) * w + (j + v)];
                }
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (int u = 0; u < 11; ++u)
                for (int v = 0; v < 11; ++v) {
                    const double wk = win[static_cast<size_t>(u) * 11 + v];
                    const double da = a[static_cast<size_t>(i + u) * w + (j + v)] - ma;
                    const double db = b[static_cast<size_t>(i + u) * w + (j + v)] - mb;
                    va += wk * da * da;
                    vb += wk * db * db;
                    cov += wk * da * db;
                }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / count;
}

}  // namespace detail

// Mean local SSIM over the valid window positions; color images score the
// mean of the per-channel values.
inline double ssim(const Image& a, const Image& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw DataError("ssim: shape mismatch");
    if (a.height < 11 || a.width < 11) throw DataError("ssim: image smaller than the 11x11 window");
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c)
        total += detail::ssim_plane(a.plane(c), b.plane(c), a.height, a.width, peak);
    return total / a.channels;
}

inline Image strip_border(const Image& img, int n) {
    if (n == 0) return img;
    if (n < 0 || img.height <= 2 * n || img.width <= 2 * n)
        throw DataError("strip_border: border too large");
    return crop(img, n, n, img.height - 2 * n, img.width - 2 * n);
}

struct MetricReport {
    double psnr_rgb = 0.0;
    std::optional<double> psnr_y;  // only for RGB inputs
    double ssim_val = 0.0;
};

inline MetricReport evaluate_metrics(const Image& out, const Image& gt, int crop_border = 0) {
    const Image a = strip_border(out, crop_border);
    const Image b = strip_border(gt, crop_border);
    MetricReport r;
    r.psnr_rgb = psnr(a, b);
    if (a.channels == 3) r.psnr_y = psnr(rgb_to_y(a), rgb_to_y(b));
    r.ssim_val = ssim(a, b);
    return r;
}

}  // namespace pnpr
