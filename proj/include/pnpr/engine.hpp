#pragma once

// Outer restoration loop: alternate the closed-form data step with a
// denoising step at a decreasing artificial noise level, re-estimating the
// residual noise each iteration, until a stopping rule fires.

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pnpr/curvature.hpp"
#include "pnpr/degrade.hpp"
#include "pnpr/denoise.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"
#include "pnpr/metrics.hpp"
#include "pnpr/noise_estimate.hpp"
#include "pnpr/spectral.hpp"

namespace pnpr {

struct PnPConfig {
    double lambda = 0.37;
    double rho = 1.0;
    int max_iters = 15;
    enum class Stop { PsnrOracle, RelChange } stop = Stop::RelChange;
    double rel_tol = 1e-4;
    double sigma0 = 50.0;
    bool trace = false;
    std::optional<double> sigma_s_override;  // non-blind mode: skip estimating from y

    void validate() const {
        if (!(lambda > 0.0)) throw DataError("PnPConfig: lambda must be > 0");
        if (max_iters < 1) throw DataError("PnPConfig: max_iters must be >= 1");
        if (!(rel_tol > 0.0)) throw DataError("PnPConfig: rel_tol must be > 0");
        if (!(rho > 0.0)) throw DataError("PnPConfig: rho must be > 0");
    }
};

struct TraceRow {
    int k = 0;
    double rel_err_x = 0.0;
    double rel_err_v = 0.0;
    double sigma_k = 0.0;
    std::optional<double> psnr_v;
};

struct RestoreResult {
    Image output;
    std::vector<TraceRow> trace;
    double sigma_s = 0.0;  // the noise level the data term used
    int iters_run = 0;
};

namespace detail {

inline double l2_norm(const Image& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double rel_err(const Image& cur, const Image& prev) {
    double num = 0.0;
    for (size_t i = 0; i < cur.data.size(); ++i) {
        const double d = cur.data[i] - prev.data[i];
        num += d * d;
    }
    const double den = l2_norm(cur);
    if (den == 0.0) return std::sqrt(num) == 0.0 ? 0.0 : 1.0;
    return std::sqrt(num) / den;
}

}  // namespace detail

inline RestoreResult run_restore(const Image& y, const DegradationSpec& spec,
                                 const NoiseEstimatorHandle& est, DenoiserHandle den,
                                 const PnPConfig& cfg, const Image* gt = nullptr) {
    spec.validate();
    cfg.validate();
    den.rho = cfg.rho;
    den.validate();
    if (cfg.stop == PnPConfig::Stop::PsnrOracle && !gt)
        throw DataError("run_restore: psnr stopping requires ground truth");
    const int s = (spec.task == Task::Sisr) ? spec.scale : 1;
    if (gt && (gt->height != y.height * s || gt->width != y.width * s || gt->channels != y.channels))
        throw DataError("run_restore: ground truth size mismatch");

    RestoreResult res;
    res.sigma_s = cfg.sigma_s_override ? clamp_sigma(*cfg.sigma_s_override)
                                       : est.estimate(y).sigma;

    Image v = (spec.task == Task::Sisr) ? upsample_bicubic(y, s) : y;
    Image x_prev = v;
    double sigma_k = clamp_sigma(cfg.sigma0);
    double psnr_prev = gt ? psnr(v, *gt) : 0.0;

    Otf otf;
    if (spec.task != Task::Denoise) otf = psf_to_otf(spec.effective_kernel(), v.height, v.width);

    for (int k = 1; k <= cfg.max_iters; ++k) {
        const FidelityWeights w{cfg.lambda, res.sigma_s, sigma_k};
        Image x(v.height, v.width, v.channels, 0.0, v.space);
        switch (spec.task) {
            case Task::Denoise: {
                // identity operator: the data step is a scalar convex mix
                const double sk2 = w.sigma_k * w.sigma_k;
                const double ls2 = w.lambda * w.sigma_s * w.sigma_s;
                const double a = sk2 / (sk2 + ls2);
                for (size_t i = 0; i < x.data.size(); ++i)
                    x.data[i] = a * y.data[i] + (1.0 - a) * v.data[i];
                break;
            }
            case Task::Deblur:
                x = deblur_x_step(y, v, otf, w);
                break;
            case Task::Sisr: {
                const double alpha =
                    w.lambda * w.sigma_s * w.sigma_s / (w.sigma_k * w.sigma_k);
                x = sisr_x_step(y, v, otf, alpha);
                break;
            }
        }
        x.require_finite("run_restore: x step");

        const double sigma_next = est.estimate(x).sigma;
        const Image curv = gaussian_curvature(x);
        Image v_next = denoise(den, x, sigma_next, curv);
        v_next.require_finite("run_restore: denoise step");

        TraceRow row;
        row.k = k;
        row.rel_err_x = detail::rel_err(x, x_prev);
        row.rel_err_v = detail::rel_err(v_next, v);
        row.sigma_k = sigma_next;
        if (gt) row.psnr_v = psnr(v_next, *gt);
        res.trace.push_back(row);
        res.iters_run = k;

        if (cfg.stop == PnPConfig::Stop::PsnrOracle && *row.psnr_v < psnr_prev) {
            // quality dropped: keep the previous iterate
            res.output = std::move(v);
            return res;
        }
        const bool rel_stop =
            cfg.stop == PnPConfig::Stop::RelChange && row.rel_err_v < cfg.rel_tol;

        x_prev = std::move(x);
        v = std::move(v_next);
        sigma_k = sigma_next;
        if (gt) psnr_prev = *row.psnr_v;
        if (rel_stop) break;
    }
    res.output = std::move(v);
    return res;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    os << "k,rel_err_x,rel_err_v,sigma_k,psnr_v\n";
    for (const auto& r : rows) {
        os << r.k << ',' << r.rel_err_x << ',' << r.rel_err_v << ',' << r.sigma_k << ',';
        if (r.psnr_v) {
            if (std::isinf(*r.psnr_v))
                os << "inf";
            else
                os << *r.psnr_v;
        }
        os << '\n';
    }
}

}  // namespace pnpr
