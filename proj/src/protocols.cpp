#include "revctl/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "revctl/error.hpp"
#include "revctl/rng.hpp"

namespace revctl {

void QuenchSpec::validate() const {
    if (!std::isfinite(gamma1) || !std::isfinite(gamma2))
        throw ValidationError("quench: fields must be finite");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ValidationError("quench: t_max must be > 0");
    if (n_cycles < 1) throw ValidationError("quench: n_cycles must be >= 1");
}

void NoiseSpec::validate() const {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw ValidationError("noise: xi must be >= 0");
    if (correlation_step < 1) throw ValidationError("noise: correlation_step must be >= 1");
}

std::vector<double> quench_draws(const QuenchSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, {0x71u}));
    std::vector<double> r(static_cast<std::size_t>(spec.n_cycles));
    for (auto& x : r) x = rng.uniform01();
    return r;
}

Pulse quench_pulse_from_draws(const QuenchSpec& spec, std::span<const double> draws, double dt) {
    spec.validate();
    if (!(dt > 0.0)) throw ValidationError("quench: dt must be > 0");
    if (draws.size() != static_cast<std::size_t>(spec.n_cycles))
        throw ValidationError("quench: need one draw per cycle");
    Pulse p;
    p.dt = dt;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double r = draws[i];
        if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("quench: draws must lie in [0, 1]");
        // The small slack keeps exact multiples of dt from rounding down a step.
        const double exact = spec.t_max * r / dt;
        const auto steps = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-12) + 1e-9)));
        const double g = (i % 2 == 0) ? spec.gamma1 : spec.gamma2;
        p.gamma.insert(p.gamma.end(), steps, g);
    }
    p.validate();
    return p;
}

Pulse random_quench_pulse(const QuenchSpec& spec, double dt) {
    const auto r = quench_draws(spec);
    return quench_pulse_from_draws(spec, r, dt);
}

Pulse time_reversed_pulse(const Pulse& pulse) {
    Pulse out = pulse;
    std::reverse(out.gamma.begin(), out.gamma.end());
    out.sign = -pulse.sign;
    return out;
}

Pulse add_noise(const Pulse& pulse, const NoiseSpec& noise) {
    noise.validate();
    Pulse out = pulse;
    if (noise.xi == 0.0) return out;
    Rng rng(derive_seed(noise.seed, {0x6e6f6973u}));
    const auto block = static_cast<std::size_t>(noise.correlation_step);
    double factor = 1.0;
    for (std::size_t k = 0; k < out.gamma.size(); ++k) {
        if (k % block == 0) factor = 1.0 + noise.xi * rng.uniform(-1.0, 1.0);
        out.gamma[k] *= factor;
    }
    return out;
}

void write_pulse_csv(std::ostream& out, const Pulse& pulse) {
    const auto old = out.precision(17);
    out << "t,gamma,sign\n";
    for (std::size_t k = 0; k < pulse.gamma.size(); ++k)
        out << pulse.dt * static_cast<double>(k) << ',' << pulse.gamma[k] << ',' << pulse.sign
            << '\n';
    out.precision(old);
}

void to_json(nlohmann::json& j, const Pulse& pulse) {
    j = nlohmann::json{{"dt", pulse.dt}, {"sign", pulse.sign}, {"gamma", pulse.gamma}};
}

void from_json(const nlohmann::json& j, Pulse& pulse) {
    Pulse p;
    p.dt = j.at("dt").get<double>();
    p.sign = j.at("sign").get<int>();
    p.gamma = j.at("gamma").get<std::vector<double>>();
    p.validate();
    pulse = std::move(p);
}

void to_json(nlohmann::json& j, const QuenchSpec& spec) {
    j = nlohmann::json{{"gamma1", spec.gamma1},
                       {"gamma2", spec.gamma2},
                       {"t_max", spec.t_max},
                       {"n_cycles", spec.n_cycles},
                       {"seed", spec.seed}};
}

void to_json(nlohmann::json& j, const NoiseSpec& spec) {
    j = nlohmann::json{
        {"xi", spec.xi}, {"seed", spec.seed}, {"correlation_step", spec.correlation_step}};
}

}  // namespace revctl
