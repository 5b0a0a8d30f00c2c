#include <doctest.h>

#include <cmath>

#include "revctl/analysis.hpp"
#include "revctl/error.hpp"
#include "revctl/rng.hpp"

using namespace revctl;

namespace {

DecayCurve synthetic(int n, double b, double eta, const std::vector<int>& n_f, double noise = 0.0,
                     std::uint64_t seed = 0) {
    Rng rng(seed);
    DecayCurve c;
    c.n = n;
    for (int k : n_f) {
        double i = std::exp(-std::pow(k / b, eta));
        if (noise > 0.0) i = std::min(1.0, i * (1.0 + rng.uniform(-noise, noise)));
        c.points.push_back({k, i, 1});
    }
    return c;
}

const std::vector<int> kGrid{4, 6, 8, 10, 12, 14};

}  // namespace

TEST_CASE("exact synthetic decay is recovered") {
    const DecayFit fit = fit_decay(synthetic(10, 7.0, 3.0, kGrid));
    CHECK(fit.b == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(fit.eta == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.residual < 1e-18);
    CHECK(fit.points_used == 6);
}

TEST_CASE("noisy synthetic decay stays within tolerance") {
    int within = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const DecayFit fit = fit_decay(synthetic(10, 7.0, 3.0, kGrid, 0.05, seed));
        if (std::abs(fit.b / 7.0 - 1.0) < 0.15) ++within;
    }
    CHECK(within == 100);
}

TEST_CASE("fixed eta fits only B") {
    const DecayFit fit = fit_decay(synthetic(10, 5.0, 2.5, kGrid), {2.5});
    CHECK(fit.eta == 2.5);
    CHECK(fit.b == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("too few usable points throw") {
    CHECK_THROWS_AS(fit_decay(synthetic(10, 7.0, 3.0, {4, 6, 8})), FitError);
    DecayCurve c = synthetic(10, 7.0, 3.0, kGrid);
    c.points[4].infidelity = 1.0;
    c.points[5].infidelity = 1.0;
    c.points[3].infidelity = 1.0;
    CHECK_THROWS_AS(fit_decay(c), FitError);
    DecayCurve bad = synthetic(10, 7.0, 3.0, kGrid);
    std::swap(bad.points[0], bad.points[1]);
    CHECK_THROWS_AS(fit_decay(bad), ValidationError);
}

TEST_CASE("fitting is idempotent") {
    const DecayCurve c = synthetic(10, 7.0, 3.0, kGrid, 0.05, 4);
    const DecayFit a = fit_decay(c);
    const DecayFit b = fit_decay(c);
    CHECK(a.b == b.b);
    CHECK(a.eta == b.eta);
    CHECK(a.residual == b.residual);
}

TEST_CASE("scaling model preference") {
    std::vector<ScalingPoint> linear, exponential, flat;
    for (double n : {4.0, 6.0, 8.0, 10.0}) {
        linear.push_back({n, 2.0 * n});
        exponential.push_back({n, std::exp(0.7 * n)});
        flat.push_back({n, 3.0});
    }
    const ScalingFit l = fit_scaling(linear);
    REQUIRE(l.preferred);
    CHECK(*l.preferred == ScalingModel::Linear);
    CHECK(l.slope == doctest::Approx(2.0));
    const ScalingFit e = fit_scaling(exponential);
    REQUIRE(e.preferred);
    CHECK(*e.preferred == ScalingModel::Exponential);
    CHECK(e.rate == doctest::Approx(0.7));
    const ScalingFit f = fit_scaling(flat);
    CHECK(f.degenerate);
    CHECK_FALSE(f.preferred);
    CHECK_THROWS_AS(fit_scaling({{4.0, 1.0}}), FitError);
}

TEST_CASE("collapse recovers the size exponent") {
    std::vector<DecayCurve> curves;
    for (int n : {10, 20, 40}) {
        std::vector<int> grid;
        const double b = std::pow(n, 1.2);
        for (int k = 1; k <= 5 * static_cast<int>(b); k += std::max(1, static_cast<int>(b / 4))) grid.push_back(k);
        curves.push_back(synthetic(n, b, 3.0, grid));
    }
    const CollapseResult r = collapse_alpha(curves);
    REQUIRE(r.alpha);
    CHECK(*r.alpha == doctest::Approx(1.2).epsilon(0.05 / 1.2));
    CHECK(r.overlap);

    // renaming the sizes by a common factor only moves the curves along u
    std::vector<DecayCurve> scaled = curves;
    for (auto& c : scaled) c.n *= 2;
    const CollapseResult s = collapse_alpha(scaled);
    REQUIRE(s.alpha);
    CHECK(std::abs(*s.alpha - *r.alpha) < 0.02);
}

TEST_CASE("monotone spline") {
    std::vector<double> u, y;
    for (int i = 0; i < 50; ++i) {
        u.push_back(i);
        y.push_back(0.5 * i);
    }
    CHECK(monotone_spline_sse(u, y, 6) < 1e-12);
    // a decreasing cloud cannot be matched by a non-decreasing fit
    std::vector<double> down(y.rbegin(), y.rend());
    CHECK(monotone_spline_sse(u, down, 6) > 1.0);
}
