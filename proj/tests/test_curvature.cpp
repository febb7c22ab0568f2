#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pnpr/curvature.hpp"
#include "pnpr/errors.hpp"
#include "test_support.hpp"

using namespace pnpr;

TEST_CASE("gradients of a linear ramp") {
    const int h = 7, w = 9;
    Image img(h, w, 1);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) img.at(0, i, j) = 2.0 * i + 3.0 * j + 1.0;
    Gradients g = image_gradients(img);
    for (int i = 1; i < h - 1; ++i)
        for (int j = 1; j < w - 1; ++j) {
            CHECK(g.fx.at(0, i, j) == 3.0);
            CHECK(g.fy.at(0, i, j) == 2.0);
            CHECK(g.fxx.at(0, i, j) == 0.0);
            CHECK(g.fyy.at(0, i, j) == 0.0);
            CHECK(g.fxy.at(0, i, j) == 0.0);
        }
    // Replicate boundary halves the one-sided first difference.
    CHECK(g.fx.at(0, 3, 0) == 1.5);
    CHECK(g.fx.at(0, 3, w - 1) == 1.5);
    CHECK(g.fy.at(0, 0, 4) == 1.0);
}

TEST_CASE("curvature of constants and planes is exactly zero") {
    Image flat(6, 6, 3, 0.42);
    Image k = gaussian_curvature(flat);
    for (double v : k.data) CHECK(v == 0.0);

    // Dyadic slopes keep every sample and every finite difference exact.
    Image ramp(8, 8, 1);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) ramp.at(0, i, j) = 0.25 * i - 0.125 * j + 5.0;
    k = gaussian_curvature(ramp);
    for (int i = 1; i < 7; ++i)
        for (int j = 1; j < 7; ++j) CHECK(k.at(0, i, j) == 0.0);
}

TEST_CASE("curvature of a paraboloid is exact in the interior") {
    // f = ((i-4)^2 + (j-4)^2) / 2 has unit second derivatives and
    // gradient (j-4, i-4), so K = 1 / (1 + (i-4)^2 + (j-4)^2)^2.
    const int n = 9;
    Image img(n, n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            img.at(0, i, j) = 0.5 * ((i - 4.0) * (i - 4.0) + (j - 4.0) * (j - 4.0));
    Image k = gaussian_curvature(img);
    CHECK(k.at(0, 4, 4) == Catch::Approx(1.0).margin(1e-12));
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) {
            const double r2 = (i - 4.0) * (i - 4.0) + (j - 4.0) * (j - 4.0);
            const double expect = 1.0 / ((1.0 + r2) * (1.0 + r2));
            CHECK(k.at(0, i, j) == Catch::Approx(expect).margin(1e-12));
        }
}

TEST_CASE("saddle surfaces have negative curvature") {
    // f = (i^2 - j^2)/2 about the center: fxx = -1, fyy = 1, fxy = 0.
    const int n = 9;
    Image img(n, n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            img.at(0, i, j) = 0.5 * ((i - 4.0) * (i - 4.0) - (j - 4.0) * (j - 4.0));
    Image k = gaussian_curvature(img);
    CHECK(k.at(0, 4, 4) == Catch::Approx(-1.0).margin(1e-12));
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) CHECK(k.at(0, i, j) < 0.0);
}

TEST_CASE("hyperbolic cross term enters squared") {
    // f = i*j about the center: fxx = fyy = 0, fxy = 1 -> numerator -1.
    const int n = 7;
    Image img(n, n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) img.at(0, i, j) = (i - 3.0) * (j - 3.0);
    Gradients g = image_gradients(img);
    CHECK(g.fxy.at(0, 3, 3) == Catch::Approx(1.0).margin(1e-12));
    Image k = gaussian_curvature(img);
    CHECK(k.at(0, 3, 3) == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("curvature is bounded on unit-range images") {
    // Second differences of values in [0,1] are bounded by 2, the cross
    // term by 1/2, and the denominator is at least 1, so |K| <= 4.25.
    for (uint64_t seed : {1u, 2u, 3u, 4u}) {
        Image img = testsup::random_image(16, 16, 3, seed);
        Image k = gaussian_curvature(img);
        for (double v : k.data) {
            REQUIRE(std::isfinite(v));
            CHECK(std::abs(v) <= 4.25);
        }
    }
}

TEST_CASE("curvature is computed independently per channel") {
    Image img(5, 5, 3, 0.0);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            img.at(0, i, j) = 0.5 * ((i - 2.0) * (i - 2.0) + (j - 2.0) * (j - 2.0));
            img.at(1, i, j) = 0.25;           // flat channel
            img.at(2, i, j) = 0.125 * i - 0.5;  // planar channel, dyadic slope
        }
    Image k = gaussian_curvature(img);
    CHECK(k.at(0, 2, 2) == Catch::Approx(1.0).margin(1e-12));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) CHECK(k.at(1, i, j) == 0.0);
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) CHECK(k.at(2, i, j) == 0.0);
}

TEST_CASE("curvature input validation") {
    CHECK_THROWS_AS(gaussian_curvature(Image(2, 5, 1, 0.0)), DataError);
    Image bad(4, 4, 1, 0.0);
    bad.at(0, 1, 1) = std::nan("");
    CHECK_THROWS_AS(gaussian_curvature(bad), NumericError);
}
