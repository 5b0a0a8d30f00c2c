#include "revctl/crab.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "revctl/error.hpp"
#include "revctl/nelder_mead.hpp"
#include "revctl/rng.hpp"

namespace revctl {

CrabBasis CrabBasis::draw(int n_f, double total_time, std::uint64_t seed) {
    if (n_f < 1) throw ValidationError("crab: n_f must be >= 1");
    if (!(total_time > 0.0)) throw ValidationError("crab: total time must be > 0");
    CrabBasis b;
    b.n_f = n_f;
    b.total_time = total_time;
    b.seed = seed;
    Rng rng(derive_seed(seed, {0x63726162u}));
    b.r.resize(static_cast<std::size_t>(n_f));
    for (auto& x : b.r) x = rng.uniform01();
    return b;
}

std::vector<double> CrabBasis::frequencies() const {
    std::vector<double> nu(r.size());
    for (std::size_t k = 0; k < r.size(); ++k)
        nu[k] = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * (1.0 + r[k]) / total_time;
    return nu;
}

void CrabBasis::validate() const {
    if (n_f < 1 || r.size() != static_cast<std::size_t>(n_f))
        throw ValidationError("crab: basis size does not match n_f");
    if (!(total_time > 0.0)) throw ValidationError("crab: total time must be > 0");
    for (double x : r)
        if (!std::isfinite(x)) throw ValidationError("crab: non-finite r_k");
}

CrabCoefficients CrabCoefficients::zeros(int n_f) {
    const auto n = static_cast<std::size_t>(std::max(n_f, 0));
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

CrabCoefficients CrabCoefficients::resized(int n_f) const {
    CrabCoefficients c = *this;
    c.a.resize(static_cast<std::size_t>(n_f), 0.0);
    c.b.resize(static_cast<std::size_t>(n_f), 0.0);
    return c;
}

void CrabCoefficients::validate(int n_f) const {
    if (a.size() != static_cast<std::size_t>(n_f) || b.size() != static_cast<std::size_t>(n_f))
        throw ValidationError("crab: coefficient count does not match n_f");
    for (std::size_t k = 0; k < a.size(); ++k)
        if (!std::isfinite(a[k]) || !std::isfinite(b[k]))
            throw ValidationError("crab: non-finite coefficient");
}

double crab_normalization(double t, double total_time) {
    if (t <= 0.0 || t >= total_time) return std::numeric_limits<double>::infinity();
    return total_time * total_time / (4.0 * t * (total_time - t));
}

namespace {

double modulation(const std::vector<double>& nu, const CrabCoefficients& c, double t, double T) {
    if (t <= 0.0 || t >= T) return 1.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k)
        sum += c.a[k] * std::sin(nu[k] * t) + c.b[k] * std::cos(nu[k] * t);
    return 1.0 + sum / crab_normalization(t, T);
}

void check_duration(const Pulse& guess, double total_time) {
    if (std::abs(guess.duration() - total_time) > 1e-9 * std::max(1.0, total_time))
        throw ValidationError("crab: guess duration does not match the basis total time");
}

void render_into(const Pulse& guess, const std::vector<double>& nu, const CrabCoefficients& c,
                 double T, Pulse& out) {
    out.dt = guess.dt;
    out.sign = guess.sign;
    out.gamma.resize(guess.gamma.size());
    const std::size_t n = guess.gamma.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0 || k + 1 == n) {
            out.gamma[k] = guess.gamma[k];
            continue;
        }
        const double t = (static_cast<double>(k) + 0.5) * guess.dt;
        out.gamma[k] = guess.gamma[k] * modulation(nu, c, t, T);
    }
}

}  // namespace

double crab_modulation(const CrabBasis& basis, const CrabCoefficients& coeffs, double t) {
    basis.validate();
    coeffs.validate(basis.n_f);
    return modulation(basis.frequencies(), coeffs, t, basis.total_time);
}

Pulse render_pulse(const Pulse& guess, const CrabBasis& basis, const CrabCoefficients& coeffs) {
    guess.validate();
    basis.validate();
    coeffs.validate(basis.n_f);
    check_duration(guess, basis.total_time);
    Pulse out;
    render_into(guess, basis.frequencies(), coeffs, basis.total_time, out);
    return out;
}

double objective(const HamiltonianPair& pair, const StateVector& psi0, const StateVector& target,
                 const Pulse& guess, const CrabBasis& basis, const CrabCoefficients& coeffs) {
    if (target.size() != psi0.size()) throw ValidationError("objective: dimension mismatch");
    const Pulse p = render_pulse(guess, basis, coeffs);
    return infidelity(propagate(pair, p, psi0), target);
}

void OptimizerConfig::validate() const {
    if (max_evaluations < 1) throw ValidationError("optimizer: max_evaluations must be >= 1");
    if (!(initial_scale > 0.0)) throw ValidationError("optimizer: initial_scale must be > 0");
    if (!(tolerance > 0.0)) throw ValidationError("optimizer: tolerance must be > 0");
    if (n_restarts < 1) throw ValidationError("optimizer: n_restarts must be >= 1");
    if (n_basis_draws < 1) throw ValidationError("optimizer: n_basis_draws must be >= 1");
    if (!(target_infidelity >= 0.0)) throw ValidationError("optimizer: target must be >= 0");
}

namespace {

// Relative simplex step along coefficients carried over by a warm start.
constexpr double kWarmStep = 0.1;

}  // namespace

std::uint64_t basis_seed(std::uint64_t seed, int draw) {
    return derive_seed(seed, {0x64726177u, static_cast<std::uint64_t>(draw)});
}

OptimizationReport optimize(const HamiltonianPair& pair, const StateVector& psi0,
                            const StateVector& target, const Pulse& guess, int n_f,
                            const OptimizerConfig& config, const std::optional<WarmStart>& warm) {
    config.validate();
    guess.validate();
    if (n_f < 1) throw ValidationError("optimize: n_f must be >= 1");
    if (psi0.size() != pair.dimension() || target.size() != pair.dimension())
        throw ValidationError("optimize: dimension mismatch");
    const double T = guess.duration();
    const auto t0 = std::chrono::steady_clock::now();
    const auto nf = static_cast<std::size_t>(n_f);

    OptimizationReport report;
    report.best_infidelity = std::numeric_limits<double>::infinity();
    Propagator prop(pair);
    Pulse rendered;

    for (int draw = 0; draw < config.n_basis_draws; ++draw) {
        CrabBasis basis = CrabBasis::draw(n_f, T, basis_seed(config.seed, draw));
        const bool warm_here = warm && warm->draw == draw;
        if (warm_here)
            for (std::size_t k = 0; k < std::min(nf, warm->r.size()); ++k) basis.r[k] = warm->r[k];

        auto unpack = [&](std::span<const double> x, CrabCoefficients& c, CrabBasis& b) {
            c.a.assign(x.begin(), x.begin() + n_f);
            c.b.assign(x.begin() + n_f, x.begin() + 2 * n_f);
            b = basis;
            if (config.optimize_frequencies) b.r.assign(x.begin() + 2 * n_f, x.begin() + 3 * n_f);
        };
        CrabCoefficients scratch_c;
        CrabBasis scratch_b;
        const Objective f = [&](std::span<const double> x) {
            unpack(x, scratch_c, scratch_b);
            render_into(guess, scratch_b.frequencies(), scratch_c, T, rendered);
            const double value = infidelity(prop.propagate(rendered, psi0), target);
            report.history.push_back(value);
            return value;
        };

        const std::size_t dim = config.optimize_frequencies ? 3 * nf : 2 * nf;
        std::vector<double> origin(dim, 0.0);
        if (warm_here) {
            const CrabCoefficients c = warm->coefficients.resized(n_f);
            std::copy(c.a.begin(), c.a.end(), origin.begin());
            std::copy(c.b.begin(), c.b.end(), origin.begin() + n_f);
        }
        if (config.optimize_frequencies)
            std::copy(basis.r.begin(), basis.r.end(), origin.begin() + 2 * n_f);

        Rng rng(derive_seed(config.seed, {0x72657374u, static_cast<std::uint64_t>(draw)}));
        for (int restart = 0; restart < config.n_restarts; ++restart) {
            std::vector<double> x0 = origin;
            std::vector<std::vector<double>> simplex;
            if (restart == 0) {
                // Inherited coefficients already sit near an optimum; a full-size
                // step there costs more shrinks than the budget allows.
                simplex = axis_simplex(x0, warm_here ? kWarmStep * config.initial_scale
                                                     : config.initial_scale);
            } else {
                for (auto& v : x0) v += rng.uniform(-config.initial_scale, config.initial_scale);
                simplex = axis_simplex(x0, config.initial_scale);
                for (std::size_t i = 1; i < simplex.size(); ++i)
                    if (rng.uniform01() < 0.5) simplex[i][i - 1] -= 2.0 * config.initial_scale;
            }
            NelderMeadOptions nm;
            nm.max_evaluations = config.max_evaluations;
            nm.tolerance = config.tolerance;
            nm.target = config.target_infidelity;
            const NelderMeadResult res = nelder_mead(f, std::move(simplex), nm);
            report.run_best.push_back(res.value);
            if (res.value < report.best_infidelity) {
                report.best_infidelity = res.value;
                unpack(res.x, report.coefficients, report.basis);
                report.best_draw = draw;
                report.converged = res.converged;
            }
        }
    }
    report.evaluations = static_cast<long>(report.history.size());
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void to_json(nlohmann::json& j, const CrabBasis& basis) {
    j = nlohmann::json{{"n_f", basis.n_f},
                       {"total_time", basis.total_time},
                       {"seed", basis.seed},
                       {"r", basis.r},
                       {"frequencies", basis.frequencies()}};
}

void to_json(nlohmann::json& j, const OptimizationReport& report) {
    nlohmann::json improvements = nlohmann::json::array();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < report.history.size(); ++i)
        if (report.history[i] < best) {
            best = report.history[i];
            improvements.push_back({i + 1, best});
        }
    j = nlohmann::json{{"best_infidelity", report.best_infidelity},
                       {"converged", report.converged},
                       {"evaluations", report.evaluations},
                       {"best_draw", report.best_draw},
                       {"basis", report.basis},
                       {"coefficients", {{"a", report.coefficients.a}, {"b", report.coefficients.b}}},
                       {"run_best", report.run_best},
                       {"history_best_so_far", improvements},
                       {"wall_seconds", report.wall_seconds}};
}

}  // namespace revctl
