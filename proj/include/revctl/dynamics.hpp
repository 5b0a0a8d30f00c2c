#pragma once

// Time evolution under piecewise-constant fields, diagonal entropy, and
// infidelity.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <vector>

#include "revctl/spin_models.hpp"

namespace revctl {

/// Piecewise-constant field on a uniform grid. Sample k holds on
/// [k*dt, (k+1)*dt). sign = -1 evolves under -H(Gamma(t)).
struct Pulse {
    double dt = 0.01;
    std::vector<double> gamma;
    int sign = +1;

    std::size_t steps() const { return gamma.size(); }
    double duration() const { return dt * static_cast<double>(gamma.size()); }
    /// Throws ValidationError for dt <= 0, an empty pulse, bad sign or non-finite samples.
    void validate() const;

    bool operator==(const Pulse&) const = default;
};

Pulse constant_pulse(double gamma, std::size_t steps, double dt);

/// Linear ramp sampled at step midpoints; the first and last samples hold
/// the exact end values.
Pulse linear_ramp(double from, double to, double total_time, double dt);

/// Number of steps covering total_time on a grid of spacing dt.
std::size_t steps_for(double total_time, double dt);

/// min(0.01, T / 2000).
double default_dt(double total_time);

/// A maximal run of identical consecutive samples.
struct PulseRun {
    std::size_t start = 0;
    std::size_t length = 0;
    double gamma = 0.0;
};
std::vector<PulseRun> pulse_runs(const Pulse& pulse);

enum class PropagationMethod { Auto, Spectral, Taylor };

struct PropagatorOptions {
    PropagationMethod method = PropagationMethod::Auto;
    /// Runs at constant field are never diagonalized above this size.
    Eigen::Index spectral_limit = 4096;
};

/// Applies exp(-i sign H(Gamma) tau) exactly (to double precision), either
/// through a cached eigendecomposition of H(Gamma) or a truncated Taylor
/// series of the action on the state. The choice depends only on the run
/// length and the matrix size, never on the cache contents, so results are
/// reproducible regardless of evaluation order.
class Propagator {
public:
    explicit Propagator(const HamiltonianPair& pair, PropagatorOptions options = {});

    const HamiltonianPair& pair() const { return *pair_; }

    /// Eigendecomposition of H(gamma), cached on a 1e-12 grid in gamma.
    const Spectrum& spectrum(double gamma);

    /// psi <- exp(-i sign H(gamma) steps*dt) psi.
    void evolve(StateVector& psi, double gamma, std::size_t steps, double dt, int sign);

    /// Applies the whole pulse.
    StateVector propagate(const Pulse& pulse, StateVector psi);

    /// Applies samples [begin, end) of the pulse in place.
    void propagate_range(const Pulse& pulse, std::size_t begin, std::size_t end, StateVector& psi);

    std::size_t cache_size() const { return cache_.size(); }
    void clear_cache() { cache_.clear(); }

private:
    bool use_spectral(double gamma, std::size_t steps, double dt) const;
    void evolve_spectral(StateVector& psi, const Eigen::VectorXd& energies,
                         const Eigen::MatrixXd& vectors, double tau, int sign);
    void evolve_taylor(StateVector& psi, double gamma, double tau, int sign);

    const HamiltonianPair* pair_;
    PropagatorOptions options_;
    std::map<std::int64_t, std::shared_ptr<const Spectrum>> cache_;
    StateVector work_a_, work_b_, work_acc_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
};

/// Convenience wrapper with a throwaway cache.
StateVector propagate(const HamiltonianPair& pair, const Pulse& pulse, const StateVector& psi0);

/// Shannon entropy (nats) of the populations of psi in the eigenbasis;
/// populations below 1e-15 contribute nothing.
double diagonal_entropy(const StateVector& psi, const Spectrum& spectrum);
double diagonal_entropy(const StateVector& psi, const HamiltonianPair& pair, double gamma);

/// 1 - |<phi|psi>|^2, clamped to [0, 1].
double infidelity(const StateVector& psi, const StateVector& phi);

struct TrajectoryRecord {
    std::vector<double> time;
    std::vector<double> entropy;
    std::vector<double> infidelity;

    std::size_t size() const { return time.size(); }
};

/// Propagates the pulse and samples S_d (eigenbasis of the field of the step
/// just applied) and the infidelity against `reference` at t = 0, every
/// `stride` steps and at the end. Returns the final state through `final_state`
/// when given.
TrajectoryRecord record_trajectory(Propagator& propagator, const Pulse& pulse,
                                   const StateVector& psi0, const StateVector& reference,
                                   std::size_t stride, StateVector* final_state = nullptr);
TrajectoryRecord record_trajectory(const HamiltonianPair& pair, const Pulse& pulse,
                                   const StateVector& psi0, const StateVector& reference,
                                   std::size_t stride);

/// CSV with header "time,s_d,infidelity".
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);

}  // namespace revctl
