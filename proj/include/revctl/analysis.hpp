#pragma once

// Fits of the optimized-infidelity decay I ~ exp(-(n_f / B)^eta), the size
// scaling of B(N), and the collapse exponent alpha of I versus n_f / N^alpha.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace revctl {

struct DecayPoint {
    int n_f = 0;
    double infidelity = 1.0;
    int seeds = 1;
};

struct DecayCurve {
    int n = 0;
    std::vector<DecayPoint> points;

    /// n_f strictly increasing, infidelities in [0, 1].
    void validate() const;
};

struct DecayFitOptions {
    /// nullopt fits eta; a value holds it fixed and fits B only.
    std::optional<double> fixed_eta;
    /// Points above this are treated as pre-asymptotic.
    double max_infidelity = 0.9;
    /// Points below this (optimizer floor) are dropped.
    double min_infidelity = 0.0;
};

struct DecayFit {
    double b = 0.0;
    double eta = 0.0;
    /// Mean squared error of ln(-ln I).
    double residual = 0.0;
    int points_used = 0;
    std::vector<std::string> warnings;
};

/// Least squares of ln(-ln I) on ln n_f. Throws FitError with fewer than 4
/// usable points.
DecayFit fit_decay(const DecayCurve& curve, const DecayFitOptions& options = {});

enum class ScalingModel { Linear, Exponential };
std::string to_string(ScalingModel model);

struct ScalingPoint {
    double n = 0.0;
    double b = 0.0;
};

struct ScalingFit {
    // B = slope * N + intercept
    double slope = 0.0;
    double intercept = 0.0;
    // B = prefactor * exp(rate * N), fitted in log space
    double prefactor = 0.0;
    double rate = 0.0;
    /// Sums of squared relative deviations, sum ((B - model) / B)^2.
    double residual_linear = 0.0;
    double residual_exponential = 0.0;
    std::optional<ScalingModel> preferred;
    bool degenerate = false;
};

/// Needs at least 3 sizes with B > 0; throws FitError otherwise. Preference
/// is withheld for constant B or residuals tied within 1e-12.
ScalingFit fit_scaling(const std::vector<ScalingPoint>& points);

struct CollapseOptions {
    double alpha_min = 0.5;
    double alpha_max = 2.5;
    double alpha_step = 0.01;
    double max_infidelity = 0.9;
    double min_infidelity = 0.0;
};

struct CollapseResult {
    std::optional<double> alpha;
    double score = 0.0;
    bool overlap = false;
    std::string message;
    std::vector<double> alphas;
    std::vector<double> scores;
};

/// Scans alpha and scores each value by the squared deviation of all points
/// (n_f / N^alpha, ln(-ln I)) from a common monotone piecewise-linear fit.
CollapseResult collapse_alpha(const std::vector<DecayCurve>& curves,
                              const CollapseOptions& options = {});

/// Monotone (non-decreasing) least-squares piecewise-linear fit of y(u) on
/// `knots` equally spaced knots; returns the residual sum of squares.
double monotone_spline_sse(const std::vector<double>& u, const std::vector<double>& y, int knots);

void to_json(nlohmann::json& j, const DecayFit& fit);
void to_json(nlohmann::json& j, const ScalingFit& fit);
void to_json(nlohmann::json& j, const CollapseResult& result);

}  // namespace revctl
