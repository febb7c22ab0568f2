#pragma once

// Brute-force reference for the frequency-domain solvers: build the explicit
// circulant and selection matrices and solve the normal equations with a
// dense LU factorization. Only meant for test instances; anything above
// 16x16 pixels is rejected.

#include <Eigen/Dense>

#include "pnpr/degrade.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/kernel.hpp"
#include "pnpr/spectral.hpp"

namespace pnpr {

// n x n matrix with A * vec(x) = vec(convolve_circular(x, k)), row-major vec.
inline Eigen::MatrixXd circulant_matrix(const Kernel& k, int h, int w) {
    k.validate("circulant_matrix");
    const int n = h * w;
    const int cu = k.kh / 2, cv = k.kw / 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int row = i * w + j;
            for (int u = 0; u < k.kh; ++u) {
                const int si = (((i - (u - cu)) % h) + h) % h;
                for (int v = 0; v < k.kw; ++v) {
                    const int sj = (((j - (v - cv)) % w) + w) % w;
                    a(row, si * w + sj) += k.at(u, v);
                }
            }
        }
    return a;
}

// (h/s * w/s) x (h * w) matrix keeping the upper-left sample of each block.
inline Eigen::MatrixXd selection_matrix(int h, int w, int s) {
    if (s < 1 || h % s != 0 || w % s != 0) throw DataError("selection_matrix: bad scale");
    const int hs = h / s, ws = w / s;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(hs * ws, h * w);
    for (int i = 0; i < hs; ++i)
        for (int j = 0; j < ws; ++j) m(i * ws + j, (i * s) * w + (j * s)) = 1.0;
    return m;
}

// Solves (sk^2 M^T M + l ss^2 I) x = sk^2 M^T y + l ss^2 v per channel,
// where M = S A is the full operator described by the degradation spec.
inline Image dense_oracle_solve(const DegradationSpec& spec, const Image& y, const Image& v,
                                const FidelityWeights& w) {
    spec.validate();
    w.validate();
    if (v.height > 16 || v.width > 16)
        throw DataError("dense_oracle_solve: instance larger than 16x16");
    if (v.channels != y.channels) throw DataError("dense_oracle_solve: channel mismatch");
    const int s = (spec.task == Task::Sisr) ? spec.scale : 1;
    if (y.height * s != v.height || y.width * s != v.width)
        throw DataError("dense_oracle_solve: y and v sizes inconsistent with task");

    const int h = v.height, wd = v.width;
    const int n = h * wd;
    Eigen::MatrixXd m = circulant_matrix(spec.effective_kernel(), h, wd);
    if (s > 1) m = selection_matrix(h, wd, s) * m;

    const double sk2 = w.sigma_k * w.sigma_k;
    const double ls2 = w.lambda * w.sigma_s * w.sigma_s;
    const Eigen::MatrixXd lhs =
        sk2 * (m.transpose() * m) + ls2 * Eigen::MatrixXd::Identity(n, n);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);

    Image x(h, wd, v.channels, 0.0, v.space);
    for (int c = 0; c < v.channels; ++c) {
        Eigen::VectorXd yv(m.rows()), vv(n);
        for (int i = 0; i < y.height; ++i)
            for (int j = 0; j < y.width; ++j) yv(i * y.width + j) = y.at(c, i, j);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < wd; ++j) vv(i * wd + j) = v.at(c, i, j);
        const Eigen::VectorXd rhs = sk2 * (m.transpose() * yv) + ls2 * vv;
        const Eigen::VectorXd xv = lu.solve(rhs);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < wd; ++j) x.at(c, i, j) = xv(i * wd + j);
    }
    return x;
}

}  // namespace pnpr
