#pragma once

// The pluggable denoiser slot of the restoration loop. Backends: identity,
// a dual-projection total-variation proximal solver, and the CNN graph.

#include <cmath>
#include <vector>

#include "pnpr/curvature.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/nn/graph.hpp"

namespace pnpr {

// Proximal map of strength * TV(.) at x: solves
//   min_v 1/2 ||v - x||^2 + strength * TV_iso(v)
// by projection onto the dual ball (Chambolle's fixed-point scheme), a fixed
// number of iterations at step size 0.248, per channel.
inline Image tv_denoise(const Image& x, double strength, int iters = 30) {
    if (strength < 0.0) throw DataError("tv_denoise: negative strength");
    if (iters < 1) throw DataError("tv_denoise: iters must be >= 1");
    if (strength == 0.0) return x;
    const int h = x.height, w = x.width;
    const double tau = 0.248;

    Image out = x;
    std::vector<double> p1(static_cast<size_t>(h) * w), p2(p1.size()), div(p1.size());
    for (int c = 0; c < x.channels; ++c) {
        const double* f = x.plane(c);
        std::fill(p1.begin(), p1.end(), 0.0);
        std::fill(p2.begin(), p2.end(), 0.0);
        for (int it = 0; it < iters; ++it) {
            // div p with the adjoint of forward differences
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const size_t id = static_cast<size_t>(i) * w + j;
                    double d = 0.0;
                    if (i < h - 1) d += p1[id];
                    if (i > 0) d -= p1[id - w];
                    if (j < w - 1) d += p2[id];
                    if (j > 0) d -= p2[id - 1];
                    div[id] = d;
                }
            // p <- (p + tau grad(div p - f/strength)) / (1 + tau |grad ...|)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const size_t id = static_cast<size_t>(i) * w + j;
                    const double u = div[id] - f[id] / strength;
                    const double gx = (i < h - 1) ? (div[id + w] - f[id + w] / strength) - u : 0.0;
                    const double gy = (j < w - 1) ? (div[id + 1] - f[id + 1] / strength) - u : 0.0;
                    const double mag = std::sqrt(gx * gx + gy * gy);
                    p1[id] = (p1[id] + tau * gx) / (1.0 + tau * mag);
                    p2[id] = (p2[id] + tau * gy) / (1.0 + tau * mag);
                }
        }
        // v = x - strength * div p
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const size_t id = static_cast<size_t>(i) * w + j;
                double d = 0.0;
                if (i < h - 1) d += p1[id];
                if (i > 0) d -= p1[id - w];
                if (j < w - 1) d += p2[id];
                if (j > 0) d -= p2[id - 1];
                out.plane(c)[id] = f[id] - strength * d;
            }
    }
    out.require_finite("tv_denoise");
    return out;
}

// Runs the denoising network on the assembled input
// [image | curvature | uniform rho*sigma/255], reflect-padding the spatial
// size up to the network's stride multiple and cropping afterwards.
inline Image cnn_denoise(const NetGraph& graph, const Image& x, double sigma, const Image& curv,
                         double rho) {
    const int c = x.channels;
    if (graph.in_channels() != 2 * c + 1)
        throw DataError("cnn_denoise: graph expects " + std::to_string(graph.in_channels()) +
                        " input channels, image needs " + std::to_string(2 * c + 1));
    if (curv.height != x.height || curv.width != x.width || curv.channels != c)
        throw DataError("cnn_denoise: curvature map does not match image");
    const int div = 1 << graph.max_level();
    const int ph = (div - x.height % div) % div;
    const int pw = (div - x.width % div) % div;
    const Image xp = pad_reflect_br(x, ph, pw);
    const Image cp = pad_reflect_br(curv, ph, pw);

    Tensor4 in(1, 2 * c + 1, xp.height, xp.width);
    const double level = rho * sigma / 255.0;
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < xp.height; ++i)
            for (int j = 0; j < xp.width; ++j) {
                in.at(0, ch, i, j) = xp.at(ch, i, j);
                in.at(0, c + ch, i, j) = cp.at(ch, i, j);
            }
    for (int i = 0; i < xp.height; ++i)
        for (int j = 0; j < xp.width; ++j) in.at(0, 2 * c, i, j) = level;

    // Keep the head map alive; a reference into the temporary would dangle.
    const auto heads = graph.run(in);
    const Tensor4& head = heads.at("image");
    Image out(x.height, x.width, c, 0.0, x.space);
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < x.height; ++i)
            for (int j = 0; j < x.width; ++j)
                out.at(ch, i, j) =
                    head.at(0, ch, i, j) + (graph.predicts_residual ? x.at(ch, i, j) : 0.0);
    out.require_finite("cnn_denoise");
    return out;
}

struct DenoiserHandle {
    enum class Backend { Identity, Tv, Cnn };
    Backend backend = Backend::Tv;
    double rho = 1.0;                 // artificial noise amplification
    const NetGraph* graph = nullptr;  // required for the Cnn backend
    int tv_iters = 30;
    double tv_gamma = 1.2;            // noise-level-to-strength calibration

    void validate() const {
        if (!(rho > 0.0)) throw DataError("denoiser: rho must be > 0");
        if (backend == Backend::Cnn && !graph) throw DataError("denoiser: cnn backend without a graph");
    }
};

// v = Denoiser(x, rho * sigma, curvature). sigma is on the 0-255 scale.
inline Image denoise(const DenoiserHandle& handle, const Image& x, double sigma,
                     const Image& curv) {
    handle.validate();
    switch (handle.backend) {
        case DenoiserHandle::Backend::Identity:
            return x;
        case DenoiserHandle::Backend::Tv:
            return tv_denoise(x, handle.tv_gamma * handle.rho * sigma / 255.0, handle.tv_iters);
        case DenoiserHandle::Backend::Cnn:
            return cnn_denoise(*handle.graph, x, sigma, curv, handle.rho);
    }
    throw DataError("denoiser: unknown backend");
}

}  // namespace pnpr
