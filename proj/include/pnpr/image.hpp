#pragma once

// Planar floating-point image container. Values live nominally in [0,1];
// intermediate results of the restoration loop may leave that range and are
// only clipped at 8-bit quantization time.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"

namespace pnpr {

enum class ColorSpace { Gray, RGB, YCbCr };

struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;  // 1 or 3
    ColorSpace space = ColorSpace::Gray;
    // Row-major per channel: data[(c*height + i)*width + j].
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0,
          ColorSpace cs = ColorSpace::Gray)
        : height(h), width(w), channels(c), space(cs),
          data(static_cast<size_t>(h) * w * c, fill) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw DataError("Image: invalid dimensions " + std::to_string(h) +
                            "x" + std::to_string(w) + "x" + std::to_string(c));
        if (c == 1 && cs == ColorSpace::RGB) space = ColorSpace::Gray;
    }

    double& at(int c, int i, int j) {
        return data[(static_cast<size_t>(c) * height + i) * width + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<size_t>(c) * height + i) * width + j];
    }
    // Pointer to the start of one channel plane (height*width values).
    double* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
    const double* plane(int c) const {
        return data.data() + static_cast<size_t>(c) * height * width;
    }
    size_t pixels_per_plane() const { return static_cast<size_t>(height) * width; }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
    void require_finite(const char* where) const {
        if (!all_finite())
            throw NumericError(std::string(where) + ": non-finite pixel value");
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
    if (!a.same_shape(b))
        throw DataError(std::string(where) + ": shape mismatch " +
                        std::to_string(a.height) + "x" + std::to_string(a.width) +
                        "x" + std::to_string(a.channels) + " vs " +
                        std::to_string(b.height) + "x" + std::to_string(b.width) +
                        "x" + std::to_string(b.channels));
}

// Full-range BT.601 luma. Used for Y-channel metrics.
inline Image rgb_to_y(const Image& img) {
    if (img.channels != 3) throw DataError("rgb_to_y: expected a 3-channel image");
    Image y(img.height, img.width, 1, 0.0, ColorSpace::Gray);
    const double* r = img.plane(0);
    const double* g = img.plane(1);
    const double* b = img.plane(2);
    for (size_t i = 0; i < img.pixels_per_plane(); ++i)
        y.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return y;
}

// Cyclic translation: pixel (i,j) -> ((i+dy) mod H, (j+dx) mod W).
inline Image circular_shift(const Image& img, int dy, int dx) {
    Image out(img.height, img.width, img.channels, 0.0, img.space);
    const int h = img.height, w = img.width;
    auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < h; ++i) {
            const int ii = wrap(i + dy, h);
            for (int j = 0; j < w; ++j) out.at(c, ii, wrap(j + dx, w)) = img.at(c, i, j);
        }
    return out;
}

namespace detail {

// Catmull-Rom (a = -0.5) cubic kernel.
inline double cubic_weight(double t) {
    const double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

}  // namespace detail

// Separable bicubic upsampling by an integer factor, replicate boundary.
// Output pixel centres map back through src = (dst + 0.5)/s - 0.5, so s = 1
// is the identity. Taps are renormalized by their sum, which keeps constant
// images exactly constant.
inline Image upsample_bicubic(const Image& img, int s) {
    if (s < 1) throw DataError("upsample_bicubic: scale must be >= 1");
    if (s == 1) return img;
    const int oh = img.height * s, ow = img.width * s;
    Image out(oh, ow, img.channels, 0.0, img.space);

    // Per-axis taps are identical for every output row/column with the same
    // phase; precompute base index and 4 normalized weights per output coord.
    auto make_taps = [s](int out_n, int in_n, std::vector<int>& base,
                         std::vector<std::array<double, 4>>& wts) {
        base.resize(out_n);
        wts.resize(out_n);
        for (int o = 0; o < out_n; ++o) {
            const double src = (o + 0.5) / s - 0.5;
            const int i0 = static_cast<int>(std::floor(src)) - 1;
            base[o] = i0;
            double sum = 0.0;
            for (int t = 0; t < 4; ++t) {
                const double wv = detail::cubic_weight(src - (i0 + t));
                wts[o][t] = wv;
                sum += wv;
            }
            for (int t = 0; t < 4; ++t) wts[o][t] /= sum;
        }
        (void)in_n;
    };

    std::vector<int> bi, bj;
    std::vector<std::array<double, 4>> wi, wj;
    make_taps(oh, img.height, bi, wi);
    make_taps(ow, img.width, bj, wj);

    auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
    // Horizontal pass then vertical pass.
    for (int c = 0; c < img.channels; ++c) {
        std::vector<double> tmp(static_cast<size_t>(img.height) * ow);
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t)
                    acc += wj[j][t] * img.at(c, i, clampi(bj[j] + t, img.width));
                tmp[static_cast<size_t>(i) * ow + j] = acc;
            }
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t)
                    acc += wi[i][t] * tmp[static_cast<size_t>(clampi(bi[i] + t, img.height)) * ow + j];
                out.at(c, i, j) = acc;
            }
    }
    out.require_finite("upsample_bicubic");
    return out;
}

// Symmetric reflection padding on the bottom/right edges only (the padded
// row next to the border repeats the border row). Used to bring images to a
// stride-friendly size; crop() undoes it.
inline Image pad_reflect_br(const Image& img, int bottom, int right) {
    if (bottom < 0 || right < 0) throw DataError("pad_reflect_br: negative padding");
    if (bottom > img.height || right > img.width)
        throw DataError("pad_reflect_br: padding exceeds image size");
    if (bottom == 0 && right == 0) return img;
    Image out(img.height + bottom, img.width + right, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < out.height; ++i) {
            const int si = i < img.height ? i : 2 * img.height - 1 - i;
            for (int j = 0; j < out.width; ++j) {
                const int sj = j < img.width ? j : 2 * img.width - 1 - j;
                out.at(c, i, j) = img.at(c, si, sj);
            }
        }
    return out;
}

inline Image crop(const Image& img, int top, int left, int h, int w) {
    if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.height || left + w > img.width)
        throw DataError("crop: window out of bounds");
    Image out(h, w, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out.at(c, i, j) = img.at(c, top + i, left + j);
    return out;
}

}  // namespace pnpr
