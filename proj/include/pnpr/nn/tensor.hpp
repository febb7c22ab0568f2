#pragma once

#include <cstddef>
#include <vector>

#include "pnpr/errors.hpp"

namespace pnpr {

// NCHW feature map, double precision internally.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) throw DataError("Tensor4: negative dimension");
    }

    size_t size() const { return data.size(); }

    double& at(int in, int ic, int ih, int iw) {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }
    double at(int in, int ic, int ih, int iw) const {
        return data[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

}  // namespace pnpr
