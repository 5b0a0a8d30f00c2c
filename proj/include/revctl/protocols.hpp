#pragma once

// Disordering by random quenches, exact time reversal, multiplicative noise.

#include <cstdint>
#include <iosfwd>
#include <span>

#include <json.hpp>

#include "revctl/dynamics.hpp"

namespace revctl {

struct QuenchSpec {
    double gamma1 = 10.0;
    double gamma2 = 0.5;
    double t_max = 100.0;
    int n_cycles = 50;
    std::uint64_t seed = 1;

    void validate() const;
};

struct NoiseSpec {
    double xi = 0.0;
    std::uint64_t seed = 1;
    int correlation_step = 1;

    void validate() const;
};

/// Waiting-time fractions r_i ~ U[0, 1] drawn from the spec's seed.
std::vector<double> quench_draws(const QuenchSpec& spec);

/// Segments alternate gamma1, gamma2, gamma1, ...; segment i lasts
/// floor(t_max * r_i / dt) steps, at least one.
Pulse quench_pulse_from_draws(const QuenchSpec& spec, std::span<const double> draws, double dt);
Pulse random_quench_pulse(const QuenchSpec& spec, double dt);

/// Reverses the sample order and negates the sign.
Pulse time_reversed_pulse(const Pulse& pulse);

/// Multiplies each block of correlation_step samples by (1 + xi r), r ~ U[-1, 1].
Pulse add_noise(const Pulse& pulse, const NoiseSpec& noise);

/// CSV with header "t,gamma,sign"; t is the start time of each step.
void write_pulse_csv(std::ostream& out, const Pulse& pulse);

void to_json(nlohmann::json& j, const Pulse& pulse);
void from_json(const nlohmann::json& j, Pulse& pulse);
void to_json(nlohmann::json& j, const QuenchSpec& spec);
void to_json(nlohmann::json& j, const NoiseSpec& spec);

}  // namespace revctl
