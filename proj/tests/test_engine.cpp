#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pnpr/degrade.hpp"
#include "pnpr/engine.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/metrics.hpp"
#include "test_support.hpp"

using namespace pnpr;

namespace {

NoiseEstimatorHandle mad_est() { return NoiseEstimatorHandle{}; }

DenoiserHandle tv_den() {
    DenoiserHandle d;
    d.backend = DenoiserHandle::Backend::Tv;
    return d;
}

DenoiserHandle identity_den() {
    DenoiserHandle d;
    d.backend = DenoiserHandle::Backend::Identity;
    return d;
}

}  // namespace

TEST_CASE("relative error helper") {
    Image prev(2, 2, 1, 1.0);
    Image cur(2, 2, 1, 2.0);
    // ||cur - prev|| = 2, ||cur|| = 4.
    CHECK(detail::rel_err(cur, prev) == Catch::Approx(0.5).epsilon(1e-12));
    Image zero(2, 2, 1, 0.0);
    CHECK(detail::rel_err(zero, zero) == 0.0);
    CHECK(detail::rel_err(zero, cur) == 1.0);
    CHECK(detail::rel_err(cur, cur) == 0.0);
}

TEST_CASE("clean input with identity denoiser is a fixed point") {
    Image y = testsup::make_scene(24, 24, 1);
    DegradationSpec spec;
    spec.task = Task::Denoise;

    PnPConfig cfg;
    cfg.max_iters = 10;
    RestoreResult res = run_restore(y, spec, mad_est(), identity_den(), cfg);
    // v0 = y and the data step returns y, so the first relative change is
    // zero and the loop stops immediately with the input unchanged.
    CHECK(res.iters_run == 1);
    CHECK(testsup::linf_diff(res.output, y) == 0.0);
    REQUIRE(res.trace.size() == 1);
    CHECK(res.trace[0].k == 1);
    CHECK(res.trace[0].rel_err_v == 0.0);
}

TEST_CASE("quality stopping never ends below the starting point") {
    // With the quality rule the loop keeps the previous iterate as soon as
    // fidelity drops, so the result can never score below the input.
    Image gt = testsup::make_scene(48, 48, 1);
    Kernel k = make_gaussian_kernel(5, 1.2);
    DegradationSpec spec;
    spec.task = Task::Deblur;
    spec.kernel = k;
    spec.has_kernel = true;
    Image y = degrade(gt, spec);  // noiseless blur

    PnPConfig cfg;
    cfg.stop = PnPConfig::Stop::PsnrOracle;
    cfg.max_iters = 10;
    RestoreResult res = run_restore(y, spec, mad_est(), tv_den(), cfg, &gt);
    CHECK(psnr(res.output, gt) >= psnr(y, gt));
    for (const auto& row : res.trace) REQUIRE(row.psnr_v.has_value());
}

TEST_CASE("noiseless clean input survives the quality rule unchanged") {
    Image gt = testsup::make_scene(32, 32, 1);
    DegradationSpec spec;
    spec.task = Task::Denoise;
    PnPConfig cfg;
    cfg.stop = PnPConfig::Stop::PsnrOracle;
    cfg.max_iters = 5;
    RestoreResult res = run_restore(gt, spec, mad_est(), identity_den(), cfg, &gt);
    CHECK(std::isinf(psnr(res.output, gt)));
    CHECK(testsup::linf_diff(res.output, gt) == 0.0);
}

TEST_CASE("max iteration cap is honored") {
    Image y = add_gaussian_noise(testsup::make_scene(24, 24, 1), 20.0, 3);
    DegradationSpec spec;
    spec.task = Task::Denoise;
    spec.sigma_s = 20.0;
    PnPConfig cfg;
    cfg.max_iters = 3;
    cfg.rel_tol = 1e-14;  // effectively never fires
    RestoreResult res = run_restore(y, spec, mad_est(), tv_den(), cfg);
    CHECK(res.iters_run == 3);
    REQUIRE(res.trace.size() == 3);
    CHECK(res.trace[0].k == 1);
    CHECK(res.trace[2].k == 3);
}

TEST_CASE("noise level override bypasses estimation") {
    Image y = add_gaussian_noise(testsup::make_scene(24, 24, 1), 20.0, 4);
    DegradationSpec spec;
    spec.task = Task::Denoise;
    PnPConfig cfg;
    cfg.max_iters = 2;
    cfg.sigma_s_override = 7.0;
    RestoreResult res = run_restore(y, spec, mad_est(), identity_den(), cfg);
    CHECK(res.sigma_s == 7.0);

    cfg.sigma_s_override = 0.001;  // below the representable floor
    res = run_restore(y, spec, mad_est(), identity_den(), cfg);
    CHECK(res.sigma_s == kSigmaFloor);

    cfg.sigma_s_override.reset();
    res = run_restore(y, spec, mad_est(), identity_den(), cfg);
    CHECK(res.sigma_s == Catch::Approx(20.0).epsilon(0.15));
}

TEST_CASE("blind deblurring improves over the blurred input") {
    Image gt = testsup::make_scene(64, 64, 1);
    DegradationSpec spec;
    spec.task = Task::Deblur;
    spec.kernel = make_gaussian_kernel(7, 1.5);
    spec.has_kernel = true;
    spec.sigma_s = 5.0;
    spec.seed = 11;
    Image y = degrade(gt, spec);

    PnPConfig cfg;
    cfg.max_iters = 30;
    cfg.rel_tol = 1e-4;
    cfg.lambda = 0.37;
    RestoreResult res = run_restore(y, spec, mad_est(), tv_den(), cfg, &gt);

    const double gain = psnr(res.output, gt) - psnr(y, gt);
    CHECK(gain > 0.5);

    // The trace has one row per iteration run, in order.
    REQUIRE(static_cast<int>(res.trace.size()) == res.iters_run);
    for (int i = 0; i < res.iters_run; ++i) CHECK(res.trace[i].k == i + 1);
    // The annealed noise level ends below its starting estimate.
    CHECK(res.trace.back().sigma_k <= res.trace.front().sigma_k);
}

TEST_CASE("super-resolution with quality stopping beats plain interpolation") {
    Image gt = testsup::make_scene(64, 64, 1);
    DegradationSpec spec;
    spec.task = Task::Sisr;
    spec.kernel = make_bicubic_kernel(2);
    spec.has_kernel = true;
    spec.scale = 2;
    spec.sigma_s = 3.0;
    spec.seed = 12;
    Image y = degrade(gt, spec);
    REQUIRE(y.height == 32);

    // The quality stopping rule returns the iterate before the first PSNR
    // drop, so it keeps the early data-consistency boost that a long blind
    // run would anneal away again.
    PnPConfig cfg;
    cfg.max_iters = 20;
    cfg.stop = PnPConfig::Stop::PsnrOracle;
    RestoreResult res = run_restore(y, spec, mad_est(), tv_den(), cfg, &gt);
    REQUIRE(res.output.height == 64);
    REQUIRE(res.output.width == 64);

    Image up = upsample_bicubic(y, 2);
    CHECK(psnr(res.output, gt) > psnr(up, gt));

    // A blind run still produces a finite, improved-over-zero-order result.
    PnPConfig blind;
    blind.max_iters = 10;
    RestoreResult res2 = run_restore(y, spec, mad_est(), tv_den(), blind);
    CHECK(res2.output.all_finite());
    REQUIRE(res2.output.height == 64);
}

TEST_CASE("engine guards") {
    Image y = testsup::make_scene(16, 16, 1);
    DegradationSpec spec;
    spec.task = Task::Denoise;
    PnPConfig cfg;

    // Quality stopping needs ground truth.
    cfg.stop = PnPConfig::Stop::PsnrOracle;
    CHECK_THROWS_AS(run_restore(y, spec, mad_est(), identity_den(), cfg), DataError);

    cfg.stop = PnPConfig::Stop::RelChange;
    Image small_gt = testsup::make_scene(8, 8, 1);
    CHECK_THROWS_AS(run_restore(y, spec, mad_est(), identity_den(), cfg, &small_gt),
                    DataError);

    cfg.lambda = 0.0;
    CHECK_THROWS_AS(run_restore(y, spec, mad_est(), identity_den(), cfg), DataError);
    cfg.lambda = 0.37;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(run_restore(y, spec, mad_est(), identity_den(), cfg), DataError);
}

TEST_CASE("trace serialization") {
    Image gt = testsup::make_scene(24, 24, 1);
    DegradationSpec spec;
    spec.task = Task::Denoise;
    PnPConfig cfg;
    cfg.max_iters = 2;
    cfg.rel_tol = 1e-14;
    RestoreResult res = run_restore(gt, spec, mad_est(), identity_den(), cfg, &gt);

    std::ostringstream os;
    write_trace_csv(os, res.trace);
    const std::string text = os.str();
    CHECK(text.rfind("k,rel_err_x,rel_err_v,sigma_k,psnr_v\n", 0) == 0);
    // Identical images render an explicit "inf" sentinel.
    CHECK(text.find("inf") != std::string::npos);
    // One line per row plus the header.
    CHECK(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')) ==
          1 + res.trace.size());

    // Without ground truth the quality column stays empty.
    res = run_restore(gt, spec, mad_est(), identity_den(), cfg);
    std::ostringstream os2;
    write_trace_csv(os2, res.trace);
    CHECK(os2.str().find("inf") == std::string::npos);
}
