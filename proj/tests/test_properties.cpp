#include <doctest.h>

// Randomized invariants: each case draws models, pulses and states from a
// seeded stream and checks properties that must hold for every draw.

#include <cmath>

#include "revctl/crab.hpp"
#include "revctl/dynamics.hpp"
#include "revctl/protocols.hpp"
#include "revctl/rng.hpp"

using namespace revctl;

namespace {

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n)); }

ModelSpec random_model(Rng& rng) {
    switch (pick(rng, 3)) {
        case 0: return ModelSpec::lmg(2 + 2 * static_cast<int>(pick(rng, 8)));
        case 1: return ModelSpec::ising(3 + static_cast<int>(pick(rng, 6)),
                                        rng.uniform01() < 0.5 ? Boundary::Open : Boundary::Periodic);
        default: return ModelSpec::ising_longitudinal(2 + static_cast<int>(pick(rng, 5)), rng.uniform(0.1, 1.0));
    }
}

Pulse random_pulse(Rng& rng, std::size_t steps) {
    Pulse p{rng.uniform(0.005, 0.1), std::vector<double>(steps), +1};
    for (auto& g : p.gamma) g = rng.uniform(-2.0, 12.0);
    return p;
}

StateVector random_state(Rng& rng, Eigen::Index d) {
    StateVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return v.normalized();
}

}  // namespace

TEST_CASE("unitarity and exact reversal for random models and pulses") {
    Rng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const Model m = build_model(random_model(rng));
        const Pulse p = random_pulse(rng, 20 + pick(rng, 150));
        const StateVector psi = random_state(rng, m.pair.dimension());
        Propagator prop(m.pair);
        const StateVector out = prop.propagate(p, psi);
        CHECK(std::abs(out.norm() - 1.0) < 1e-9);
        CHECK(infidelity(prop.propagate(time_reversed_pulse(p), out), psi) < 1e-8);
    }
}

TEST_CASE("Hamiltonians are symmetric with a real spectrum ordered ascending") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Model m = build_model(random_model(rng));
        const double g = rng.uniform(-5.0, 5.0);
        const Eigen::MatrixXd h = m.pair.dense(g);
        CHECK((h - h.transpose()).norm() < 1e-12);
        const Spectrum s = diagonalize(m.pair, g);
        for (Eigen::Index i = 1; i < s.energies.size(); ++i) CHECK(s.energies[i - 1] <= s.energies[i]);
        CHECK((h * s.vectors - s.vectors * s.energies.asDiagonal()).norm() < 1e-9 * (1.0 + h.norm()));
    }
}

TEST_CASE("diagonal entropy and infidelity bounds") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const Model m = build_model(random_model(rng));
        const double g = rng.uniform(0.0, 10.0);
        const StateVector a = random_state(rng, m.pair.dimension());
        const StateVector b = random_state(rng, m.pair.dimension());
        const double s = diagonal_entropy(a, m.pair, g);
        CHECK(s >= 0.0);
        CHECK(s <= std::log(static_cast<double>(m.pair.dimension())) + 1e-12);
        const double i = infidelity(a, b);
        CHECK(i >= 0.0);
        CHECK(i <= 1.0);
        CHECK(std::abs(i - infidelity(b, a)) < 1e-14);
    }
}

TEST_CASE("CRAB endpoints are pinned for every draw") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const double total = rng.uniform(0.5, 50.0);
        const double dt = total / static_cast<double>(10 + pick(rng, 500));
        const Pulse guess = linear_ramp(rng.uniform(-1, 10), rng.uniform(-1, 10), total, dt);
        const int n_f = 1 + static_cast<int>(pick(rng, 20));
        const CrabBasis basis = CrabBasis::draw(n_f, guess.duration(), rng.next());
        CrabCoefficients c = CrabCoefficients::zeros(n_f);
        for (int k = 0; k < n_f; ++k) {
            c.a[static_cast<std::size_t>(k)] = rng.uniform(-10, 10);
            c.b[static_cast<std::size_t>(k)] = rng.uniform(-10, 10);
        }
        const Pulse p = render_pulse(guess, basis, c);
        CHECK(p.gamma.front() == guess.gamma.front());
        CHECK(p.gamma.back() == guess.gamma.back());
    }
}

TEST_CASE("noise stays within its relative bound and alternation holds") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const Pulse p = random_pulse(rng, 50 + pick(rng, 200));
        const double xi = std::pow(10.0, rng.uniform(-7.0, 0.0));
        const Pulse n = add_noise(p, NoiseSpec{xi, rng.next(), 1 + static_cast<int>(pick(rng, 10))});
        for (std::size_t k = 0; k < p.steps(); ++k)
            CHECK(std::abs(n.gamma[k] - p.gamma[k]) <= xi * std::abs(p.gamma[k]) * (1 + 1e-12));

        QuenchSpec q;
        q.n_cycles = 1 + static_cast<int>(pick(rng, 30));
        q.t_max = rng.uniform(0.1, 5.0);
        q.seed = rng.next();
        const auto runs = pulse_runs(random_quench_pulse(q, 0.01));
        for (std::size_t i = 1; i < runs.size(); ++i) CHECK(runs[i].gamma != runs[i - 1].gamma);
    }
}
