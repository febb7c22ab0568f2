#pragma once

// Gaussian curvature of the graph surface z = f(x,y), evaluated per channel
// with unit grid spacing. Feeds the denoiser's attention path and the
// curvature CLI command.

#include <array>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"

namespace pnpr {

struct Gradients {
    Image fx, fy, fxx, fyy, fxy;
};

// Central first/second differences with replicate boundary. x runs along
// columns (j), y along rows (i).
inline Gradients image_gradients(const Image& img) {
    if (img.height < 3 || img.width < 3) throw DataError("image_gradients: image smaller than 3x3");
    const int h = img.height, w = img.width;
    Gradients g{Image(h, w, img.channels, 0.0, img.space), Image(h, w, img.channels, 0.0, img.space),
                Image(h, w, img.channels, 0.0, img.space), Image(h, w, img.channels, 0.0, img.space),
                Image(h, w, img.channels, 0.0, img.space)};
    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    for (int c = 0; c < img.channels; ++c) {
        for (int i = 0; i < h; ++i) {
            const int iu = clampi(i - 1, h - 1), id = clampi(i + 1, h - 1);
            for (int j = 0; j < w; ++j) {
                const int jl = clampi(j - 1, w - 1), jr = clampi(j + 1, w - 1);
                const double f = img.at(c, i, j);
                const double fl = img.at(c, i, jl), fr = img.at(c, i, jr);
                const double fu = img.at(c, iu, j), fd = img.at(c, id, j);
                g.fx.at(c, i, j) = (fr - fl) / 2.0;
                g.fy.at(c, i, j) = (fd - fu) / 2.0;
                g.fxx.at(c, i, j) = fr - 2.0 * f + fl;
                g.fyy.at(c, i, j) = fd - 2.0 * f + fu;
                g.fxy.at(c, i, j) = (img.at(c, id, jr) - img.at(c, id, jl) -
                                     img.at(c, iu, jr) + img.at(c, iu, jl)) /
                                    4.0;
            }
        }
    }
    return g;
}

// K = (fxx*fyy - fxy^2) / (1 + fx^2 + fy^2)^2. The denominator is >= 1, so
// the map is finite whenever the input is.
inline Image gaussian_curvature(const Image& img) {
    img.require_finite("gaussian_curvature");
    const Gradients g = image_gradients(img);
    Image k(img.height, img.width, img.channels, 0.0, img.space);
    for (size_t i = 0; i < k.data.size(); ++i) {
        const double fx = g.fx.data[i], fy = g.fy.data[i];
        const double num = g.fxx.data[i] * g.fyy.data[i] - g.fxy.data[i] * g.fxy.data[i];
        const double den = 1.0 + fx * fx + fy * fy;
        k.data[i] = num / (den * den);
    }
    return k;
}

}  // namespace pnpr
