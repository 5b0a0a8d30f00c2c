#include "revctl/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "revctl/error.hpp"

namespace revctl {

std::vector<std::vector<double>> axis_simplex(const std::vector<double>& x0, double scale) {
    std::vector<std::vector<double>> s(x0.size() + 1, x0);
    for (std::size_t i = 0; i < x0.size(); ++i) s[i + 1][i] += scale;
    return s;
}

NelderMeadResult nelder_mead(const Objective& f, std::vector<std::vector<double>> simplex,
                             const NelderMeadOptions& options) {
    if (simplex.empty()) throw ValidationError("nelder_mead: empty simplex");
    const std::size_t n = simplex.front().size();
    if (simplex.size() != n + 1) throw ValidationError("nelder_mead: simplex needs n + 1 vertices");
    if (options.max_evaluations < 1) throw ValidationError("nelder_mead: budget must be >= 1");

    const double dn = static_cast<double>(std::max<std::size_t>(n, 1));
    const double alpha = 1.0;
    const double beta = options.adaptive ? 1.0 + 2.0 / dn : 2.0;            // expansion
    const double gamma = options.adaptive ? 0.75 - 1.0 / (2.0 * dn) : 0.5;  // contraction
    const double delta = options.adaptive ? 1.0 - 1.0 / dn : 0.5;           // shrink

    NelderMeadResult result;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(std::span<const double>(x));
    };
    auto budget_left = [&] { return evals < options.max_evaluations; };

    std::vector<double> values;
    values.reserve(n + 1);
    std::size_t filled = 0;
    for (; filled < simplex.size() && budget_left(); ++filled) {
        values.push_back(eval(simplex[filled]));
        if (values.back() <= options.target) {
            ++filled;
            break;
        }
    }
    simplex.resize(filled);

    auto best_index = [&] {
        return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) -
                                        values.begin());
    };
    auto finish = [&](bool converged) {
        const std::size_t b = best_index();
        result.x = simplex[b];
        result.value = values[b];
        result.evaluations = evals;
        result.converged = converged;
        return result;
    };
    if (filled < n + 1) return finish(values[best_index()] <= options.target);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t ib = order.front(), iw = order.back(), isw = order[n - 1];
        if (values[ib] <= options.target) return finish(true);
        if (values[iw] - values[ib] <= options.tolerance) return finish(true);
        if (!budget_left()) return finish(false);

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v <= n; ++v) {
            if (v == iw) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i];
        }
        for (auto& c : centroid) c /= dn;

        for (std::size_t i = 0; i < n; ++i)
            xr[i] = centroid[i] + alpha * (centroid[i] - simplex[iw][i]);
        const double fr = eval(xr);

        if (fr < values[ib]) {
            if (!budget_left()) {
                simplex[iw] = xr;
                values[iw] = fr;
                continue;
            }
            for (std::size_t i = 0; i < n; ++i)
                xe[i] = centroid[i] + beta * (xr[i] - centroid[i]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[iw] = xe;
                values[iw] = fe;
            } else {
                simplex[iw] = xr;
                values[iw] = fr;
            }
            continue;
        }
        if (fr < values[isw]) {
            simplex[iw] = xr;
            values[iw] = fr;
            continue;
        }
        if (!budget_left()) {
            if (fr < values[iw]) {
                simplex[iw] = xr;
                values[iw] = fr;
            }
            continue;
        }
        const bool outside = fr < values[iw];
        for (std::size_t i = 0; i < n; ++i)
            xc[i] = outside ? centroid[i] + gamma * (xr[i] - centroid[i])
                            : centroid[i] - gamma * (centroid[i] - simplex[iw][i]);
        const double fc = eval(xc);
        if ((outside && fc <= fr) || (!outside && fc < values[iw])) {
            simplex[iw] = xc;
            values[iw] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t v = 0; v <= n && budget_left(); ++v) {
            if (v == ib) continue;
            for (std::size_t i = 0; i < n; ++i)
                simplex[v][i] = simplex[ib][i] + delta * (simplex[v][i] - simplex[ib][i]);
            values[v] = eval(simplex[v]);
        }
    }
}

}  // namespace revctl
