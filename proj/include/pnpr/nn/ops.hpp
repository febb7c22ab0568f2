#pragma once

// Forward-only primitive layers. Convolution weights are stored flat in
// [out, in/groups, kh, kw] order; transposed-convolution weights in
// [in, out, 2, 2] order, which makes tconv2x2_stride2 the exact adjoint of
// conv2d(stride=2) with the roles of the first two axes swapped.

#include <cmath>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/nn/tensor.hpp"

namespace pnpr {

struct ConvParams {
    std::vector<double> w;  // [co][ci/g][kh][kw]
    std::vector<double> b;  // [co]
};

inline Tensor4 conv2d(const Tensor4& x, const ConvParams& p, int out_ch, int kh, int kw,
                      int stride, int pad, int groups) {
    if (groups < 1 || x.c % groups != 0 || out_ch % groups != 0)
        throw DataError("conv2d: channels not divisible by groups");
    const int cig = x.c / groups, cog = out_ch / groups;
    if (p.w.size() != static_cast<size_t>(out_ch) * cig * kh * kw)
        throw DataError("conv2d: weight size mismatch");
    if (p.b.size() != static_cast<size_t>(out_ch)) throw DataError("conv2d: bias size mismatch");
    const int oh = (x.h + 2 * pad - kh) / stride + 1;
    const int ow = (x.w + 2 * pad - kw) / stride + 1;
    if (oh < 1 || ow < 1) throw DataError("conv2d: kernel does not fit input");

    Tensor4 y(x.n, out_ch, oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int g = 0; g < groups; ++g)
            for (int co = 0; co < cog; ++co) {
                const int oc = g * cog + co;
                const double* wk = p.w.data() + static_cast<size_t>(oc) * cig * kh * kw;
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j) {
                        double acc = p.b[oc];
                        for (int ci = 0; ci < cig; ++ci) {
                            const int ic = g * cig + ci;
                            for (int u = 0; u < kh; ++u) {
                                const int si = i * stride + u - pad;
                                if (si < 0 || si >= x.h) continue;
                                for (int v = 0; v < kw; ++v) {
                                    const int sj = j * stride + v - pad;
                                    if (sj < 0 || sj >= x.w) continue;
                                    acc += wk[(static_cast<size_t>(ci) * kh + u) * kw + v] *
                                           x.at(n, ic, si, sj);
                                }
                            }
                        }
                        y.at(n, oc, i, j) = acc;
                    }
            }
    return y;
}

// Doubles the spatial size. Weight layout [in][out][2][2]; with the first two
// axes read as [co][ci] this is the adjoint of the 2x2 stride-2 conv2d.
inline Tensor4 tconv2x2_stride2(const Tensor4& x, const ConvParams& p, int out_ch) {
    if (p.w.size() != static_cast<size_t>(x.c) * out_ch * 4)
        throw DataError("tconv2x2_stride2: weight size mismatch");
    if (p.b.size() != static_cast<size_t>(out_ch))
        throw DataError("tconv2x2_stride2: bias size mismatch");
    Tensor4 y(x.n, out_ch, x.h * 2, x.w * 2);
    for (int n = 0; n < x.n; ++n) {
        for (int oc = 0; oc < out_ch; ++oc)
            for (int i = 0; i < y.h; ++i)
                for (int j = 0; j < y.w; ++j) y.at(n, oc, i, j) = p.b[oc];
        for (int ic = 0; ic < x.c; ++ic)
            for (int oc = 0; oc < out_ch; ++oc) {
                const double* wk = p.w.data() + (static_cast<size_t>(ic) * out_ch + oc) * 4;
                for (int i = 0; i < x.h; ++i)
                    for (int j = 0; j < x.w; ++j) {
                        const double v = x.at(n, ic, i, j);
                        y.at(n, oc, 2 * i, 2 * j) += wk[0] * v;
                        y.at(n, oc, 2 * i, 2 * j + 1) += wk[1] * v;
                        y.at(n, oc, 2 * i + 1, 2 * j) += wk[2] * v;
                        y.at(n, oc, 2 * i + 1, 2 * j + 1) += wk[3] * v;
                    }
            }
    }
    return y;
}

inline Tensor4 relu(const Tensor4& x) {
    Tensor4 y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

inline Tensor4 sigmoid(const Tensor4& x) {
    Tensor4 y = x;
    for (auto& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
    return y;
}

inline Tensor4 add(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) throw DataError("tensor add: shape mismatch");
    Tensor4 y = a;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
    return y;
}

inline Tensor4 mul(const Tensor4& a, const Tensor4& b) {
    if (!a.same_shape(b)) throw DataError("tensor mul: shape mismatch");
    Tensor4 y = a;
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] *= b.data[i];
    return y;
}

inline Tensor4 channel_slice(const Tensor4& x, int begin, int count) {
    if (begin < 0 || count < 1 || begin + count > x.c)
        throw DataError("channel_slice: range out of bounds");
    Tensor4 y(x.n, count, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < count; ++c)
            for (int i = 0; i < x.h; ++i)
                for (int j = 0; j < x.w; ++j) y.at(n, c, i, j) = x.at(n, begin + c, i, j);
    return y;
}

// Inverted-bottleneck residual block without normalization:
// y = x + proj(relu(expand(dwconv7(x)))).
struct ConvNextParams {
    ConvParams dw;    // depthwise 7x7, [c][1][7][7]
    ConvParams pw1;   // expand 1x1, [4c][c][1][1]
    ConvParams pw2;   // project 1x1, [c][4c][1][1]
};

inline Tensor4 convnext_block(const Tensor4& x, const ConvNextParams& p) {
    Tensor4 t = conv2d(x, p.dw, x.c, 7, 7, 1, 3, x.c);
    t = conv2d(t, p.pw1, 4 * x.c, 1, 1, 1, 0, 1);
    t = relu(t);
    t = conv2d(t, p.pw2, x.c, 1, 1, 1, 0, 1);
    return add(x, t);
}

// Curvature-gated attention. Returns the refined features and the
// intermediate restored image used as a supervised head.
struct CsamParams {
    ConvParams a;  // features -> image channels, 1x1
    ConvParams b;  // image channels -> features, 1x1
    ConvParams c;  // curvature channels -> features, 1x1
};

struct CsamOut {
    Tensor4 refined;
    Tensor4 restored;
};

inline CsamOut csam(const Tensor4& features, const Tensor4& image, const Tensor4& curvature,
                    const CsamParams& p) {
    if (features.h != image.h || features.w != image.w || features.h != curvature.h ||
        features.w != curvature.w)
        throw DataError("csam: spatial size mismatch");
    CsamOut out;
    out.restored = add(image, conv2d(features, p.a, image.c, 1, 1, 1, 0, 1));
    Tensor4 gate = sigmoid(add(conv2d(out.restored, p.b, features.c, 1, 1, 1, 0, 1),
                               sigmoid(conv2d(curvature, p.c, features.c, 1, 1, 1, 0, 1))));
    out.refined = add(mul(features, gate), features);
    return out;
}

}  // namespace pnpr
