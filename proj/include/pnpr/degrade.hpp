#pragma once

// Forward degradation: circular blur, grid-point downsampling, seeded noise.
// All noise levels are carried on the 0-255 scale and divided by 255 where
// they meet [0,1] pixel data.

#include <cstdint>
#include <string>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/kernel.hpp"
#include "pnpr/rng.hpp"

namespace pnpr {

enum class Task { Denoise, Deblur, Sisr };

inline std::string task_name(Task t) {
    switch (t) {
        case Task::Denoise: return "denoise";
        case Task::Deblur: return "deblur";
        case Task::Sisr: return "sisr";
    }
    return "?";
}

inline Task parse_task(const std::string& s) {
    if (s == "denoise") return Task::Denoise;
    if (s == "deblur") return Task::Deblur;
    if (s == "sisr") return Task::Sisr;
    throw DataError("unknown task '" + s + "' (expected denoise|deblur|sisr)");
}

struct DegradationSpec {
    Task task = Task::Denoise;
    Kernel kernel;           // identity (delta) when has_kernel is false
    bool has_kernel = false;
    int scale = 1;           // s for SISR, 1 otherwise
    double sigma_s = 0.0;    // observation noise level, 0-255 scale
    uint64_t seed = 0;

    void validate() const {
        if (task == Task::Deblur) {
            if (!has_kernel) throw DataError("DegradationSpec: deblur requires a kernel");
            if (scale != 1) throw DataError("DegradationSpec: deblur requires scale 1");
        }
        if (task == Task::Sisr && (scale < 2 || scale > 4))
            throw DataError("DegradationSpec: sisr scale must be 2, 3 or 4");
        if (task == Task::Denoise && scale != 1)
            throw DataError("DegradationSpec: denoise requires scale 1");
        if (sigma_s < 0.0) throw DataError("DegradationSpec: negative sigma");
        if (has_kernel) kernel.validate("DegradationSpec");
    }

    Kernel effective_kernel() const { return has_kernel ? kernel : delta_kernel(); }
};

// Circular (periodic) convolution with the kernel centred at its middle
// element: out(i,j) = sum_k k(u,v) img(i-du mod H, j-dv mod W).
inline Image convolve_circular(const Image& img, const Kernel& k) {
    k.validate("convolve_circular");
    if (k.kh > img.height || k.kw > img.width)
        throw DataError("convolve_circular: kernel larger than image");
    const int h = img.height, w = img.width;
    const int cu = k.kh / 2, cv = k.kw / 2;
    Image out(h, w, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c) {
        const double* src = img.plane(c);
        double* dst = out.plane(c);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = 0.0;
                for (int u = 0; u < k.kh; ++u) {
                    int si = i - (u - cu);
                    si = ((si % h) + h) % h;
                    for (int v = 0; v < k.kw; ++v) {
                        int sj = j - (v - cv);
                        sj = ((sj % w) + w) % w;
                        acc += k.at(u, v) * src[static_cast<size_t>(si) * w + sj];
                    }
                }
                dst[static_cast<size_t>(i) * w + j] = acc;
            }
    }
    return out;
}

// Keeps the upper-left sample of each s x s block.
inline Image downsample_select(const Image& img, int s) {
    if (s < 1) throw DataError("downsample_select: scale must be >= 1");
    if (s == 1) return img;
    if (img.height % s != 0 || img.width % s != 0)
        throw DataError("downsample_select: dimensions " + std::to_string(img.height) + "x" +
                        std::to_string(img.width) + " not divisible by " + std::to_string(s));
    Image out(img.height / s, img.width / s, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < out.height; ++i)
            for (int j = 0; j < out.width; ++j) out.at(c, i, j) = img.at(c, i * s, j * s);
    return out;
}

// Zero insertion; the adjoint of downsample_select.
inline Image upsample_zero(const Image& img, int s) {
    if (s < 1) throw DataError("upsample_zero: scale must be >= 1");
    if (s == 1) return img;
    Image out(img.height * s, img.width * s, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) out.at(c, i * s, j * s) = img.at(c, i, j);
    return out;
}

// i.i.d. Gaussian noise of level sigma (0-255 scale); element index keyed into
// the Philox stream so the result is a pure function of (seed, pixel). Values
// are not clipped here.
inline Image add_gaussian_noise(const Image& img, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw DataError("add_gaussian_noise: negative sigma");
    Image out = img;
    if (sigma == 0.0) return out;
    const double s = sigma / 255.0;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += s * philox_normal(seed, i, kStreamNoise);
    out.require_finite("add_gaussian_noise");
    return out;
}

// Full forward model y = T(x) + n for the given spec.
inline Image degrade(const Image& clean, const DegradationSpec& spec) {
    spec.validate();
    Image y = clean;
    if (spec.has_kernel && !(spec.kernel.kh == 1 && spec.kernel.kw == 1))
        y = convolve_circular(y, spec.kernel);
    if (spec.task == Task::Sisr) y = downsample_select(y, spec.scale);
    return add_gaussian_noise(y, spec.sigma_s, spec.seed);
}

}  // namespace pnpr
