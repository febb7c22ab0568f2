#pragma once

// Noise level estimation. The default backend measures the median absolute
// deviation of the one-level Haar diagonal band; the optional CNN backend
// reads a trained estimation network's level head. Estimates are clamped to
// [0.1, 75] on the 0-255 scale.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/nn/graph.hpp"

namespace pnpr {

inline constexpr double kSigmaFloor = 0.1;
inline constexpr double kSigmaCeil = 75.0;

inline double clamp_sigma(double s) { return std::clamp(s, kSigmaFloor, kSigmaCeil); }

struct NoiseEstimate {
    double sigma = kSigmaFloor;            // 0-255 scale
    std::optional<Image> distribution;     // per-pixel noise residual, CNN backend only
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = (m + lo) / 2.0;
    }
    return m;
}

}  // namespace detail

// MAD over the diagonal detail coefficients of non-overlapping 2x2 blocks:
// hh = (a - b - c + d)/2 is N(0, sigma) under i.i.d. Gaussian noise, and
// median(|N(0,s)|) = 0.6745 s.
inline NoiseEstimate estimate_sigma_mad(const Image& img) {
    if (img.height < 2 || img.width < 2) throw DataError("estimate_sigma_mad: image smaller than 2x2");
    img.require_finite("estimate_sigma_mad");
    const int bh = img.height / 2, bw = img.width / 2;
    std::vector<double> hh;
    hh.reserve(static_cast<size_t>(bh) * bw);
    double total = 0.0;
    for (int c = 0; c < img.channels; ++c) {
        hh.clear();
        for (int i = 0; i < bh; ++i)
            for (int j = 0; j < bw; ++j) {
                const double a = img.at(c, 2 * i, 2 * j), b = img.at(c, 2 * i, 2 * j + 1);
                const double d = img.at(c, 2 * i + 1, 2 * j), e = img.at(c, 2 * i + 1, 2 * j + 1);
                hh.push_back(std::abs((a - b - d + e) / 2.0));
            }
        total += 255.0 * detail::median_inplace(hh) / 0.6745;
    }
    NoiseEstimate out;
    out.sigma = clamp_sigma(total / img.channels);
    return out;
}

// Reads the "level" and "distribution" heads of an estimation network.
// sigma is 255 times the spatial mean of the level head over the original
// (uncropped) image area.
inline NoiseEstimate estimate_sigma_cnn(const Image& img, const NetGraph& graph) {
    if (graph.in_channels() != img.channels)
        throw DataError("estimate_sigma_cnn: graph input channels do not match image");
    if (graph.head_channels("level") != img.channels ||
        graph.head_channels("distribution") != img.channels)
        throw DataError("estimate_sigma_cnn: head shape mismatch");
    const int div = 1 << graph.max_level();
    const int ph = (div - img.height % div) % div;
    const int pw = (div - img.width % div) % div;
    const Image padded = pad_reflect_br(img, ph, pw);

    Tensor4 in(1, padded.channels, padded.height, padded.width);
    std::copy(padded.data.begin(), padded.data.end(), in.data.begin());
    auto heads = graph.run(in);

    const Tensor4& level = heads.at("level");
    double mean = 0.0;
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) mean += level.at(0, c, i, j);
    mean /= static_cast<double>(img.channels) * img.height * img.width;

    NoiseEstimate out;
    out.sigma = clamp_sigma(255.0 * mean);
    const Tensor4& dist = heads.at("distribution");
    Image dmap(img.height, img.width, img.channels, 0.0, img.space);
    for (int c = 0; c < img.channels; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j) dmap.at(c, i, j) = dist.at(0, c, i, j);
    out.distribution = std::move(dmap);
    return out;
}

struct NoiseEstimatorHandle {
    enum class Backend { MadHaar, Cnn };
    Backend backend = Backend::MadHaar;
    const NetGraph* graph = nullptr;  // required for the Cnn backend

    NoiseEstimate estimate(const Image& img) const {
        switch (backend) {
            case Backend::MadHaar: return estimate_sigma_mad(img);
            case Backend::Cnn:
                if (!graph) throw DataError("noise estimator: cnn backend without a graph");
                return estimate_sigma_cnn(img, *graph);
        }
        throw DataError("noise estimator: unknown backend");
    }
};

}  // namespace pnpr
