#pragma once

#include <functional>
#include <span>
#include <vector>

namespace revctl {

struct NelderMeadOptions {
    int max_evaluations = 2000;
    /// Converged once max f - min f over the simplex drops below this.
    double tolerance = 1e-8;
    /// Stop as soon as a vertex reaches this value.
    double target = -1e300;
    /// Dimension-dependent coefficients (Gao & Han); classic ones otherwise.
    bool adaptive = true;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `f` starting from `simplex` (n + 1 vertices of dimension n).
NelderMeadResult nelder_mead(const Objective& f, std::vector<std::vector<double>> simplex,
                             const NelderMeadOptions& options);

/// Axis-aligned simplex x0, x0 + scale e_i.
std::vector<std::vector<double>> axis_simplex(const std::vector<double>& x0, double scale);

}  // namespace revctl
