#include <doctest.h>

#include <cmath>
#include <numbers>

#include "revctl/error.hpp"
#include "revctl/crab.hpp"
#include "revctl/experiments.hpp"
#include "revctl/rng.hpp"

using namespace revctl;

namespace {

CrabCoefficients random_coefficients(int n_f, std::uint64_t seed, double scale) {
    Rng rng(seed);
    CrabCoefficients c = CrabCoefficients::zeros(n_f);
    for (int k = 0; k < n_f; ++k) {
        c.a[static_cast<std::size_t>(k)] = rng.uniform(-scale, scale);
        c.b[static_cast<std::size_t>(k)] = rng.uniform(-scale, scale);
    }
    return c;
}

}  // namespace

TEST_CASE("basis draws are reproducible prefixes") {
    const CrabBasis a = CrabBasis::draw(8, 50.0, 3);
    const CrabBasis b = CrabBasis::draw(8, 50.0, 3);
    const CrabBasis big = CrabBasis::draw(12, 50.0, 3);
    CHECK(a.r == b.r);
    CHECK(a.frequencies() == b.frequencies());
    for (std::size_t k = 0; k < 8; ++k) CHECK(big.r[k] == a.r[k]);
    const auto nu = a.frequencies();
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(nu[k] > 0.0);
        CHECK(nu[k] == 2.0 * std::numbers::pi * static_cast<double>(k + 1) * (1.0 + a.r[k]) / 50.0);
        CHECK(a.r[k] >= 0.0);
        CHECK(a.r[k] < 1.0);
    }
    CHECK(CrabBasis::draw(8, 50.0, 4).r != a.r);
}

TEST_CASE("normalization pins the endpoints") {
    CHECK(crab_normalization(5.0, 10.0) == 1.0);
    CHECK(std::isinf(crab_normalization(0.0, 10.0)));
    CHECK(std::isinf(crab_normalization(10.0, 10.0)));
    const CrabBasis basis = CrabBasis::draw(3, 10.0, 1);
    const CrabCoefficients c = random_coefficients(3, 5, 2.0);
    CHECK(crab_modulation(basis, c, 0.0) == 1.0);
    CHECK(crab_modulation(basis, c, 10.0) == 1.0);
}

TEST_CASE("zero coefficients reproduce the guess exactly") {
    const Pulse guess = linear_ramp(0.5, 10.0, 20.0, 0.01);
    const CrabBasis basis = CrabBasis::draw(6, 20.0, 2);
    CHECK(render_pulse(guess, basis, CrabCoefficients::zeros(6)) == guess);
}

TEST_CASE("rendered endpoints equal the guess for any coefficients") {
    const Pulse guess = linear_ramp(0.5, 10.0, 20.0, 0.01);
    const CrabBasis basis = CrabBasis::draw(6, 20.0, 2);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Pulse p = render_pulse(guess, basis, random_coefficients(6, seed, 5.0));
        CHECK(std::abs(p.gamma.front() - guess.gamma.front()) <= 1e-12);
        CHECK(std::abs(p.gamma.back() - guess.gamma.back()) <= 1e-12);
        CHECK(p.dt == guess.dt);
        CHECK(p.steps() == guess.steps());
    }
}

TEST_CASE("single harmonic at the midpoint") {
    const double total = 1.01;
    const Pulse guess = constant_pulse(2.0, 101, 0.01);
    const CrabBasis basis = CrabBasis::draw(1, total, 9);
    CrabCoefficients c = CrabCoefficients::zeros(1);
    c.a[0] = crab_normalization(total / 2, total);
    const Pulse p = render_pulse(guess, basis, c);
    const double nu = basis.frequencies()[0];
    CHECK(std::abs(p.gamma[50] - 2.0 * (1.0 + std::sin(nu * total / 2))) < 1e-12);
}

TEST_CASE("render rejects mismatched inputs") {
    const Pulse guess = linear_ramp(0.5, 10.0, 20.0, 0.01);
    CHECK_THROWS_AS(render_pulse(guess, CrabBasis::draw(3, 10.0, 1), CrabCoefficients::zeros(3)), ValidationError);
    CHECK_THROWS_AS(render_pulse(guess, CrabBasis::draw(3, 20.0, 1), CrabCoefficients::zeros(2)), ValidationError);
    OptimizerConfig bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("objective is self-consistent and deterministic") {
    const Model m = build_model(ModelSpec::lmg(10));
    const StateVector gs = ground_state(m, 10.0).state;
    const Pulse guess = linear_ramp(10.0, 0.5, 10.0, 0.01);
    const CrabBasis basis = CrabBasis::draw(4, 10.0, 1);
    const CrabCoefficients c = random_coefficients(4, 3, 0.5);
    const StateVector target = propagate(m.pair, render_pulse(guess, basis, c), gs);
    CHECK(objective(m.pair, gs, target, guess, basis, c) < 1e-12);
    const double a = objective(m.pair, gs, gs, guess, basis, c);
    const double b = objective(m.pair, gs, gs, guess, basis, c);
    CHECK(a == b);

    const Spectrum s = diagonalize(m.pair, 1.3);
    const StateVector e = s.vectors.col(2).cast<std::complex<double>>();
    CHECK(objective(m.pair, e, e, constant_pulse(1.3, 500, 0.01), CrabBasis::draw(4, 5.0, 1),
                    CrabCoefficients::zeros(4)) < 1e-12);
}

TEST_CASE("optimum at the origin is found immediately") {
    const Model m = build_model(ModelSpec::lmg(8));
    const StateVector gs = ground_state(m, 10.0).state;
    const Pulse guess = constant_pulse(10.0, 200, 0.01);
    OptimizerConfig cfg;
    const auto rep = optimize(m.pair, gs, gs, guess, 3, cfg);
    CHECK(rep.best_infidelity < 1e-10);
    CHECK(rep.evaluations < 100);
    CHECK(rep.converged);
}

TEST_CASE("optimizer report invariants") {
    const Model m = build_model(ModelSpec::lmg(8));
    const StateVector gs = ground_state(m, 10.0).state;
    const Spectrum s = diagonalize(m.pair, 0.5);
    const StateVector start = s.vectors.col(2).cast<std::complex<double>>();
    const Pulse guess = linear_ramp(0.5, 10.0, 10.0, 0.02);
    OptimizerConfig cfg;
    cfg.max_evaluations = 150;
    cfg.n_restarts = 3;
    cfg.n_basis_draws = 2;
    cfg.initial_scale = 0.5;
    const auto a = optimize(m.pair, start, gs, guess, 3, cfg);
    const auto b = optimize(m.pair, start, gs, guess, 3, cfg);
    CHECK(a.history == b.history);
    CHECK(a.best_infidelity == b.best_infidelity);
    CHECK(a.evaluations <= 150L * 3 * 2);
    CHECK(a.run_best.size() == 6);
    for (double r : a.run_best) CHECK(a.best_infidelity <= r);
    double best = 1.0;
    for (double v : a.history) best = std::min(best, v);
    CHECK(best == a.best_infidelity);
    // the reported optimum reproduces its value
    CHECK(objective(m.pair, start, gs, guess, a.basis, a.coefficients) == a.best_infidelity);

    OptimizerConfig one;
    one.max_evaluations = 1;
    const auto z = optimize(m.pair, start, gs, guess, 3, one);
    CHECK(z.best_infidelity == infidelity(propagate(m.pair, guess, start), gs));
    CHECK_FALSE(z.converged);
}

TEST_CASE("warm start never does worse than the smaller basis") {
    const Model m = build_model(ModelSpec::lmg(8));
    const StateVector gs = ground_state(m, 10.0).state;
    const StateVector start = diagonalize(m.pair, 0.5).vectors.col(3).cast<std::complex<double>>();
    const Pulse guess = linear_ramp(0.5, 10.0, 10.0, 0.02);
    OptimizerConfig cfg;
    cfg.max_evaluations = 200;
    cfg.initial_scale = 0.5;
    const auto small = optimize(m.pair, start, gs, guess, 2, cfg);
    const WarmStart warm{small.best_draw, small.coefficients, {}};
    const auto large = optimize(m.pair, start, gs, guess, 4, cfg, warm);
    CHECK(large.history.front() == small.best_infidelity);
    CHECK(large.best_infidelity <= small.best_infidelity);
}

TEST_CASE("LMG N=10, T=100, n_f=10 reaches 1e-2") {
    const Model m = build_model(ModelSpec::lmg(10));
    const StateVector gs = ground_state(m, 10.0).state;
    QuenchSpec q;
    q.t_max = 100.0 / critical_gap(ModelSpec::lmg(10));
    q.seed = 5;
    Propagator prop(m.pair);
    const double dt = 0.05;
    const Disordering d = run_disordering(prop, gs, q, dt, 1u << 30);
    CHECK(d.segment_entropy.back() > 1.0);
    const Pulse guess = linear_ramp(d.pulse.gamma.back(), 10.0, 100.0, dt);
    OptimizerConfig cfg;
    cfg.max_evaluations = 12000;
    cfg.initial_scale = 1.0;
    cfg.target_infidelity = 1e-3;
    const auto rep = optimize(m.pair, d.final_state, gs, guess, 10, cfg);
    CHECK(rep.best_infidelity < 1e-2);
}
