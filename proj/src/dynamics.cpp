#include "revctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "revctl/error.hpp"

namespace revctl {

namespace {

constexpr double kTaylorTheta = 4.0;
constexpr double kTaylorTolerance = 1e-16;
constexpr int kTaylorMaxTerms = 200;
constexpr std::size_t kCacheLimit = 64;

bool quantize(double gamma, std::int64_t& key) {
    const double scaled = gamma * 1e12;
    if (!(std::abs(scaled) < 9e18)) return false;
    key = std::llround(scaled);
    return true;
}

}  // namespace

void Pulse::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("pulse: dt must be > 0");
    if (gamma.empty()) throw ValidationError("pulse: needs at least one sample");
    if (sign != 1 && sign != -1) throw ValidationError("pulse: sign must be +1 or -1");
    for (double g : gamma)
        if (!std::isfinite(g)) throw ValidationError("pulse: non-finite field sample");
}

std::size_t steps_for(double total_time, double dt) {
    if (!(dt > 0.0) || !(total_time > 0.0))
        throw ValidationError("pulse: total time and dt must be > 0");
    const double ratio = total_time / dt;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio)));
}

double default_dt(double total_time) { return std::min(0.01, total_time / 2000.0); }

Pulse constant_pulse(double gamma, std::size_t steps, double dt) {
    Pulse p{dt, std::vector<double>(steps, gamma), +1};
    p.validate();
    return p;
}

Pulse linear_ramp(double from, double to, double total_time, double dt) {
    const std::size_t n = steps_for(total_time, dt);
    Pulse p{dt, std::vector<double>(n), +1};
    const double span = dt * static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * dt;
        p.gamma[k] = from + (to - from) * t / span;
    }
    p.gamma.front() = from;
    if (n > 1) p.gamma.back() = to;
    p.validate();
    return p;
}

std::vector<PulseRun> pulse_runs(const Pulse& pulse) {
    std::vector<PulseRun> runs;
    for (std::size_t k = 0; k < pulse.gamma.size(); ++k) {
        if (!runs.empty() && runs.back().gamma == pulse.gamma[k])
            ++runs.back().length;
        else
            runs.push_back({k, 1, pulse.gamma[k]});
    }
    return runs;
}

Propagator::Propagator(const HamiltonianPair& pair, PropagatorOptions options)
    : pair_(&pair), options_(options) {}

const Spectrum& Propagator::spectrum(double gamma) {
    std::int64_t key = 0;
    if (!quantize(gamma, key)) {
        // Outside the cacheable range; keep the last one around in slot 0.
        auto s = std::make_shared<const Spectrum>(diagonalize(*pair_, gamma));
        cache_[std::numeric_limits<std::int64_t>::min()] = s;
        return *s;
    }
    if (auto it = cache_.find(key); it != cache_.end()) return *it->second;
    // Diagonalize at the grid value so the result does not depend on which
    // nearby gamma reached the cache first.
    auto s = std::make_shared<const Spectrum>(
        diagonalize(*pair_, static_cast<double>(key) / 1e12));
    if (cache_.size() >= kCacheLimit) cache_.erase(cache_.begin());
    cache_[key] = s;
    return *cache_[key];
}

bool Propagator::use_spectral(double gamma, std::size_t steps, double dt) const {
    const Eigen::Index d = pair_->dimension();
    switch (options_.method) {
        case PropagationMethod::Spectral: return true;
        case PropagationMethod::Taylor: return false;
        case PropagationMethod::Auto: break;
    }
    if (d > options_.spectral_limit) return false;
    std::int64_t key = 0;
    if (quantize(gamma, key) && cache_.count(key)) return true;
    // Rough nanosecond costs, calibrated on small and mid-sized sectors.
    const double dd = static_cast<double>(d);
    const double eig_cost = (pair_->tridiagonal() ? 40.0 * dd * dd : 6.0 * dd * dd * dd) + 5000.0;
    const double x = pair_->norm1_bound(gamma) * dt * static_cast<double>(steps);
    const double sub = std::max(1.0, std::ceil(x / kTaylorTheta));
    const double terms = sub * (2.7 * std::min(x / sub, kTaylorTheta) + 12.0);
    const double matvec = 1.5 * static_cast<double>(pair_->nonzeros()) + 300.0;
    return eig_cost < terms * matvec;
}

void Propagator::evolve(StateVector& psi, double gamma, std::size_t steps, double dt, int sign) {
    if (psi.size() != pair_->dimension())
        throw ValidationError("propagate: state dimension does not match the Hamiltonian");
    if (steps == 0) return;
    const double tau = dt * static_cast<double>(steps);
    if (use_spectral(gamma, steps, dt)) {
        std::int64_t key = 0;
        if (steps > 1 || (quantize(gamma, key) && cache_.count(key))) {
            const Spectrum& s = spectrum(gamma);
            evolve_spectral(psi, s.energies, s.vectors, tau, sign);
        } else {
            // One-off field value: skip the cache.
            diagonalize(*pair_, gamma, solver_);
            evolve_spectral(psi, solver_.eigenvalues(), solver_.eigenvectors(), tau, sign);
        }
    } else
        evolve_taylor(psi, gamma, tau, sign);
}

void Propagator::evolve_spectral(StateVector& psi, const Eigen::VectorXd& energies,
                                 const Eigen::MatrixXd& vectors, double tau, int sign) {
    StateVector& c = work_a_;
    c.noalias() = vectors.transpose() * psi;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double phase = -static_cast<double>(sign) * energies[j] * tau;
        c[j] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
    psi.noalias() = vectors * c;
}

void Propagator::evolve_taylor(StateVector& psi, double gamma, double tau, int sign) {
    const double x = pair_->norm1_bound(gamma) * tau;
    const int substeps = std::max(1, static_cast<int>(std::ceil(x / kTaylorTheta)));
    const double h = tau / substeps;
    const std::complex<double> factor(0.0, -static_cast<double>(sign) * h);

    StateVector& term = work_a_;
    StateVector& next = work_b_;
    StateVector& acc = work_acc_;
    for (int sub = 0; sub < substeps; ++sub) {
        term = psi;
        acc = psi;
        const double scale = psi.cwiseAbs().maxCoeff();
        int small = 0;
        int k = 1;
        for (; k <= kTaylorMaxTerms; ++k) {
            pair_->apply(gamma, term, next);
            next *= factor / static_cast<double>(k);
            term.swap(next);
            acc += term;
            if (term.cwiseAbs().maxCoeff() <= kTaylorTolerance * scale) {
                if (++small == 2) break;
            } else {
                small = 0;
            }
        }
        if (k > kTaylorMaxTerms) throw Error("propagate: Taylor series failed to converge");
        psi.swap(acc);
    }
}

void Propagator::propagate_range(const Pulse& pulse, std::size_t begin, std::size_t end,
                                 StateVector& psi) {
    std::size_t k = begin;
    while (k < end) {
        std::size_t stop = k + 1;
        while (stop < end && pulse.gamma[stop] == pulse.gamma[k]) ++stop;
        evolve(psi, pulse.gamma[k], stop - k, pulse.dt, pulse.sign);
        k = stop;
    }
}

StateVector Propagator::propagate(const Pulse& pulse, StateVector psi) {
    pulse.validate();
    if (psi.size() != pair_->dimension())
        throw ValidationError("propagate: state dimension does not match the Hamiltonian");
    propagate_range(pulse, 0, pulse.steps(), psi);
    return psi;
}

StateVector propagate(const HamiltonianPair& pair, const Pulse& pulse, const StateVector& psi0) {
    Propagator prop(pair);
    return prop.propagate(pulse, psi0);
}

double diagonal_entropy(const StateVector& psi, const Spectrum& spectrum) {
    const Eigen::VectorXcd c = spectrum.vectors.transpose() * psi;
    double s = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const double p = std::norm(c[j]);
        if (p < 1e-15) continue;
        s -= p * std::log(p);
    }
    return std::max(0.0, s);
}

double diagonal_entropy(const StateVector& psi, const HamiltonianPair& pair, double gamma) {
    if (psi.size() != pair.dimension())
        throw ValidationError("diagonal_entropy: state dimension does not match");
    return diagonal_entropy(psi, diagonalize(pair, gamma));
}

double infidelity(const StateVector& psi, const StateVector& phi) {
    if (psi.size() != phi.size()) throw ValidationError("infidelity: dimension mismatch");
    const double overlap = std::norm(phi.dot(psi));
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

TrajectoryRecord record_trajectory(Propagator& propagator, const Pulse& pulse,
                                   const StateVector& psi0, const StateVector& reference,
                                   std::size_t stride, StateVector* final_state) {
    pulse.validate();
    if (stride == 0) throw ValidationError("record_trajectory: stride must be >= 1");
    const HamiltonianPair& pair = propagator.pair();
    if (psi0.size() != pair.dimension() || reference.size() != pair.dimension())
        throw ValidationError("record_trajectory: dimension mismatch");

    TrajectoryRecord rec;
    StateVector psi = psi0;
    auto sample = [&](std::size_t k) {
        const double g = pulse.gamma[k == 0 ? 0 : k - 1];
        rec.time.push_back(pulse.dt * static_cast<double>(k));
        rec.entropy.push_back(diagonal_entropy(psi, propagator.spectrum(g)));
        rec.infidelity.push_back(infidelity(psi, reference));
    };
    sample(0);
    std::size_t k = 0;
    const std::size_t n = pulse.steps();
    while (k < n) {
        const std::size_t next = std::min(n, k + stride);
        propagator.propagate_range(pulse, k, next, psi);
        k = next;
        sample(k);
    }
    if (final_state) *final_state = psi;
    return rec;
}

TrajectoryRecord record_trajectory(const HamiltonianPair& pair, const Pulse& pulse,
                                   const StateVector& psi0, const StateVector& reference,
                                   std::size_t stride) {
    Propagator prop(pair);
    return record_trajectory(prop, pulse, psi0, reference, stride);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
    const auto old = out.precision(17);
    out << "time,s_d,infidelity\n";
    for (std::size_t i = 0; i < record.size(); ++i)
        out << record.time[i] << ',' << record.entropy[i] << ',' << record.infidelity[i] << '\n';
    out.precision(old);
}

}  // namespace revctl
