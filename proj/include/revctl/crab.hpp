#pragma once

// Chopped random basis (CRAB) control: Gamma(t) = Gamma0(t) f(t) with
//
//   f(t) = 1 + sum_k [A_k sin(nu_k t) + B_k cos(nu_k t)] / lambda(t),
//   nu_k = 2 pi k (1 + r_k) / T,  lambda(t) = T^2 / (4 t (T - t)),
//
// optimized with multi-start Nelder-Mead on the final-state infidelity.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "revctl/dynamics.hpp"

namespace revctl {

struct CrabBasis {
    int n_f = 0;
    double total_time = 0.0;
    std::vector<double> r;  // r_k, k = 1..n_f
    std::uint64_t seed = 0;

    /// Draws r_k ~ U[0, 1] in order k = 1, 2, ...; the basis for n_f is a
    /// prefix of the basis for any larger n_f with the same seed.
    static CrabBasis draw(int n_f, double total_time, std::uint64_t seed);

    std::vector<double> frequencies() const;
    void validate() const;
};

struct CrabCoefficients {
    std::vector<double> a;  // sine amplitudes
    std::vector<double> b;  // cosine amplitudes

    static CrabCoefficients zeros(int n_f);
    int n_f() const { return static_cast<int>(a.size()); }
    /// Zero-pads (or truncates) to n_f harmonics.
    CrabCoefficients resized(int n_f) const;
    void validate(int n_f) const;
};

/// lambda(t) = T^2 / (4 t (T - t)); infinite at the endpoints.
double crab_normalization(double t, double total_time);

/// f(t); exactly 1 for t <= 0 and t >= T.
double crab_modulation(const CrabBasis& basis, const CrabCoefficients& coeffs, double t);

/// Samples Gamma0 * f at step midpoints; the first and last steps keep the
/// guess values (f pinned to 1 at both ends).
Pulse render_pulse(const Pulse& guess, const CrabBasis& basis, const CrabCoefficients& coeffs);

/// Final-state infidelity of psi0 driven by the rendered pulse against target.
double objective(const HamiltonianPair& pair, const StateVector& psi0, const StateVector& target,
                 const Pulse& guess, const CrabBasis& basis, const CrabCoefficients& coeffs);

struct OptimizerConfig {
    int max_evaluations = 2000;
    double initial_scale = 0.1;
    double tolerance = 1e-8;
    int n_restarts = 1;
    int n_basis_draws = 1;
    bool optimize_frequencies = false;
    std::uint64_t seed = 1;
    /// Each run stops once the infidelity falls below this.
    double target_infidelity = 1e-10;

    void validate() const;
};

/// Starting coefficients for the first run of one basis draw.
struct WarmStart {
    int draw = 0;
    CrabCoefficients coefficients;
    /// Optional leading r_k overriding the drawn ones (optimized frequencies).
    std::vector<double> r;
};

/// Seed of basis draw `draw` under optimizer seed `seed`.
std::uint64_t basis_seed(std::uint64_t seed, int draw);

struct OptimizationReport {
    double best_infidelity = 1.0;
    CrabBasis basis;
    CrabCoefficients coefficients;
    int best_draw = 0;
    long evaluations = 0;
    /// Objective value of every evaluation, in order.
    std::vector<double> history;
    /// Best value of each (basis draw, restart) run.
    std::vector<double> run_best;
    double wall_seconds = 0.0;
    bool converged = false;
};

/// Multi-start Nelder-Mead over (A_k, B_k) (plus nu_k when enabled) across
/// n_basis_draws basis draws with n_restarts starts each. The first start of
/// each draw begins at the origin, except for the draw named by `warm`, which
/// begins at its (zero-padded) coefficients.
OptimizationReport optimize(const HamiltonianPair& pair, const StateVector& psi0,
                            const StateVector& target, const Pulse& guess, int n_f,
                            const OptimizerConfig& config,
                            const std::optional<WarmStart>& warm = std::nullopt);

void to_json(nlohmann::json& j, const CrabBasis& basis);
void to_json(nlohmann::json& j, const OptimizationReport& report);

}  // namespace revctl
