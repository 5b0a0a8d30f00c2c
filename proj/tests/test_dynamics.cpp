#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "revctl/error.hpp"
#include "revctl/dynamics.hpp"
#include "revctl/protocols.hpp"
#include "revctl/rng.hpp"

using namespace revctl;

namespace {

Pulse random_pulse(std::uint64_t seed, std::size_t steps, double dt, double lo, double hi) {
    Rng rng(seed);
    Pulse p{dt, std::vector<double>(steps), +1};
    for (auto& g : p.gamma) g = rng.uniform(lo, hi);
    return p;
}

StateVector random_state(std::uint64_t seed, Eigen::Index d) {
    Rng rng(seed);
    StateVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return v.normalized();
}

}  // namespace

TEST_CASE("eigenstates are stationary under a constant field") {
    for (const ModelSpec& spec : {ModelSpec::lmg(12), ModelSpec::ising(6), ModelSpec::ising_longitudinal(5, 0.5)}) {
        const Model m = build_model(spec);
        const Spectrum s = diagonalize(m.pair, 0.7);
        for (Eigen::Index i : {Eigen::Index{0}, s.vectors.cols() / 2}) {
            const StateVector v = s.vectors.col(i).cast<std::complex<double>>();
            const StateVector out = propagate(m.pair, constant_pulse(0.7, 500, 0.01), v);
            CHECK(infidelity(out, v) < 1e-10);
        }
    }
}

TEST_CASE("two-spin chain at zero field oscillates as cos^2(J t)") {
    const Model m = build_model(ModelSpec::ising(2, Boundary::Open, 0.8));
    StateVector up = StateVector::Zero(2);
    up[static_cast<Eigen::Index>(m.basis.polarized_index())] = 1.0;
    for (std::size_t steps : {1u, 37u, 250u, 1001u}) {
        const double t = 0.01 * static_cast<double>(steps);
        const StateVector out = propagate(m.pair, constant_pulse(0.0, steps, 0.01), up);
        CHECK(std::norm(out.dot(up)) == doctest::Approx(std::pow(std::cos(0.8 * t), 2)).epsilon(1e-12));
    }
}

TEST_CASE("spectral and Taylor routes agree") {
    for (const ModelSpec& spec : {ModelSpec::lmg(16), ModelSpec::ising(7), ModelSpec::ising_longitudinal(6, 0.5)}) {
        const Model m = build_model(spec);
        const StateVector psi = random_state(3, m.pair.dimension());
        for (double dt : {0.01, 0.2}) {
            const Pulse p = random_pulse(11, 120, dt, -2.0, 10.0);
            Propagator spectral(m.pair, {PropagationMethod::Spectral});
            Propagator taylor(m.pair, {PropagationMethod::Taylor});
            Propagator autop(m.pair);
            const StateVector a = spectral.propagate(p, psi);
            const StateVector b = taylor.propagate(p, psi);
            const StateVector c = autop.propagate(p, psi);
            CHECK((a - b).norm() < 1e-10);
            CHECK((a - c).norm() < 1e-10);
        }
    }
}

TEST_CASE("Dicke evolution matches full-space infinite-range evolution") {
    for (int n = 2; n <= 8; ++n) {
        const Model m = build_model(ModelSpec::lmg(n));
        const Eigen::MatrixXd p = oracle::dicke_even(n);
        const Pulse pulse = random_pulse(100 + static_cast<std::uint64_t>(n), 60, 0.05, -1.0, 3.0);
        std::vector<Eigen::MatrixXd> hs;
        for (double g : pulse.gamma) hs.push_back(oracle::lmg(n, 1.0, g));
        const StateVector psi = random_state(7, m.pair.dimension());
        const StateVector dicke = propagate(m.pair, pulse, psi);
        const Eigen::VectorXcd full = oracle::evolve(hs, pulse.dt, +1, p.cast<std::complex<double>>() * psi);
        const StateVector embedded = p.cast<std::complex<double>>() * dicke;
        CHECK(infidelity(embedded, full) < 1e-8);
    }
}

TEST_CASE("forward then reversed pulse is the identity") {
    for (const ModelSpec& spec : {ModelSpec::lmg(20), ModelSpec::ising(8), ModelSpec::ising_longitudinal(6, 0.5)}) {
        const Model m = build_model(spec);
        const StateVector psi = ground_state(m, 10.0).state;
        const Pulse p = random_pulse(5, 300, 0.05, 0.0, 10.0);
        Propagator prop(m.pair);
        const StateVector back = prop.propagate(time_reversed_pulse(p), prop.propagate(p, psi));
        CHECK(infidelity(back, psi) < 1e-8);
    }
}

TEST_CASE("norm is conserved at every step") {
    const Model m = build_model(ModelSpec::ising(8));
    Propagator prop(m.pair);
    StateVector psi = random_state(9, m.pair.dimension());
    const Pulse p = random_pulse(13, 400, 0.03, -3.0, 12.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < p.steps(); ++k) {
        prop.propagate_range(p, k, k + 1, psi);
        worst = std::max(worst, std::abs(psi.norm() - 1.0));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("halving the default step changes the final state by less than 1e-6") {
    struct Case {
        ModelSpec spec;
        double total;
    };
    for (const Case& c : {Case{ModelSpec::lmg(20), 100.0}, Case{ModelSpec::ising(8), 50.0}}) {
        const Model m = build_model(c.spec);
        const StateVector psi = ground_state(m, 10.0).state;
        const double dt = default_dt(c.total);
        const StateVector a = propagate(m.pair, linear_ramp(0.5, 10.0, c.total, dt), psi);
        const StateVector b = propagate(m.pair, linear_ramp(0.5, 10.0, c.total, dt / 2), psi);
        CHECK(infidelity(a, b) < 1e-6);
    }
}

TEST_CASE("propagation commutes with a global phase") {
    const Model m = build_model(ModelSpec::lmg(10));
    const StateVector psi = random_state(21, m.pair.dimension());
    const std::complex<double> phase = std::polar(1.0, 0.37);
    const Pulse p = random_pulse(2, 50, 0.1, 0.0, 4.0);
    CHECK((propagate(m.pair, p, phase * psi) - phase * propagate(m.pair, p, psi)).norm() < 1e-12);
}

TEST_CASE("diagonal entropy") {
    const Model m = build_model(ModelSpec::ising(6));
    const Spectrum s = diagonalize(m.pair, 0.9);
    for (Eigen::Index i = 0; i < s.vectors.cols(); i += 7)
        CHECK(diagonal_entropy(s.vectors.col(i).cast<std::complex<double>>(), s) == doctest::Approx(0.0).epsilon(1e-12));
    for (int d : {2, 5, 32}) {
        StateVector v = StateVector::Zero(s.vectors.rows());
        for (int i = 0; i < d; ++i) v += std::polar(1.0, 0.3 * i) * s.vectors.col(i).cast<std::complex<double>>();
        v.normalize();
        CHECK(diagonal_entropy(v, s) == doctest::Approx(std::log(d)).epsilon(1e-10));
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double e = diagonal_entropy(random_state(seed, s.vectors.rows()), m.pair, 0.9);
        CHECK(e >= 0.0);
        CHECK(e <= std::log(static_cast<double>(s.vectors.rows())) + 1e-12);
    }
}

TEST_CASE("infidelity") {
    const StateVector a = random_state(1, 8);
    CHECK(infidelity(a, a) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(infidelity(std::polar(1.0, 1.1) * a, a) < 1e-15);
    StateVector e0 = StateVector::Zero(8), e1 = StateVector::Zero(8);
    e0[0] = 1.0;
    e1[3] = 1.0;
    CHECK(infidelity(e0, e1) == 1.0);
    CHECK_THROWS_AS(infidelity(e0, StateVector::Zero(4)), ValidationError);
}

TEST_CASE("trajectory at an eigenstate is flat") {
    const Model m = build_model(ModelSpec::lmg(10));
    const StateVector gs = ground_state(m, 2.0).state;
    const TrajectoryRecord rec = record_trajectory(m.pair, constant_pulse(2.0, 1000, 0.01), gs, gs, 100);
    REQUIRE(rec.size() == 11);
    CHECK(rec.time.back() == doctest::Approx(10.0));
    for (std::size_t i = 0; i < rec.size(); ++i) {
        CHECK(rec.entropy[i] < 1e-12);
        CHECK(rec.infidelity[i] < 1e-12);
    }
    std::ostringstream out;
    write_trajectory_csv(out, rec);
    CHECK(out.str().rfind("time,s_d,infidelity\n", 0) == 0);
}

TEST_CASE("pulse helpers") {
    CHECK(default_dt(100.0) == 0.01);
    CHECK(default_dt(10.0) == doctest::Approx(0.005));
    CHECK(steps_for(1.0, 0.01) == 100);
    const Pulse r = linear_ramp(0.5, 10.0, 1.0, 0.01);
    CHECK(r.steps() == 100);
    CHECK(r.gamma.front() == 0.5);
    CHECK(r.gamma.back() == 10.0);
    CHECK(r.gamma[50] == doctest::Approx(0.5 + 9.5 * 0.505));
    const auto runs = pulse_runs(Pulse{0.1, {1, 1, 2, 2, 2, 1}, 1});
    REQUIRE(runs.size() == 3);
    CHECK(runs[1].start == 2);
    CHECK(runs[1].length == 3);
    CHECK_THROWS_AS((Pulse{0.0, {1.0}, 1}.validate()), ValidationError);
    CHECK_THROWS_AS((Pulse{0.1, {}, 1}.validate()), ValidationError);
    CHECK_THROWS_AS((Pulse{0.1, {1.0}, 2}.validate()), ValidationError);
    CHECK_THROWS_AS((Pulse{0.1, {NAN}, 1}.validate()), ValidationError);
}
