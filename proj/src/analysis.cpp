#include "revctl/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "revctl/error.hpp"

namespace revctl {

void DecayCurve::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].n_f < 1) throw ValidationError("decay curve: n_f must be >= 1");
        if (i > 0 && points[i].n_f <= points[i - 1].n_f)
            throw ValidationError("decay curve: n_f must be strictly increasing");
        if (!(points[i].infidelity >= 0.0 && points[i].infidelity <= 1.0))
            throw ValidationError("decay curve: infidelity outside [0, 1]");
    }
}

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

Line least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line l;
    l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    l.intercept = my - l.slope * mx;
    return l;
}

bool usable(double infidelity, double lo, double hi) {
    return infidelity > 0.0 && infidelity < 1.0 && infidelity <= hi && infidelity >= lo;
}

}  // namespace

DecayFit fit_decay(const DecayCurve& curve, const DecayFitOptions& options) {
    curve.validate();
    DecayFit fit;
    std::vector<double> x, y;
    for (const auto& p : curve.points) {
        if (p.infidelity >= 1.0) {
            std::ostringstream w;
            w << "n_f = " << p.n_f << ": infidelity >= 1 excluded";
            fit.warnings.push_back(w.str());
            continue;
        }
        if (!usable(p.infidelity, options.min_infidelity, options.max_infidelity)) continue;
        x.push_back(std::log(static_cast<double>(p.n_f)));
        y.push_back(std::log(-std::log(p.infidelity)));
    }
    if (x.size() < 4) {
        std::ostringstream msg;
        msg << "fit_decay: N = " << curve.n << " has " << x.size()
            << " usable points (need 4 with I < " << options.max_infidelity << ")";
        throw FitError(msg.str());
    }
    fit.points_used = static_cast<int>(x.size());

    // ln(-ln I) = eta ln n_f - eta ln B
    if (options.fixed_eta) {
        const double eta = *options.fixed_eta;
        if (!(eta > 0.0)) throw ValidationError("fit_decay: fixed eta must be > 0");
        double mean = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) mean += eta * x[i] - y[i];
        mean /= static_cast<double>(x.size());
        fit.eta = eta;
        fit.b = std::exp(mean / eta);
    } else {
        const Line l = least_squares_line(x, y);
        if (!(l.slope > 0.0)) throw FitError("fit_decay: non-positive slope, no decay");
        fit.eta = l.slope;
        fit.b = std::exp(-l.intercept / l.slope);
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double model = fit.eta * (x[i] - std::log(fit.b));
        sse += (y[i] - model) * (y[i] - model);
    }
    fit.residual = sse / static_cast<double>(x.size());
    return fit;
}

std::string to_string(ScalingModel model) {
    return model == ScalingModel::Linear ? "linear" : "exponential";
}

ScalingFit fit_scaling(const std::vector<ScalingPoint>& points) {
    if (points.size() < 3) throw FitError("fit_scaling: need at least 3 sizes");
    std::vector<double> n, b, logb;
    for (const auto& p : points) {
        if (!(p.b > 0.0) || !std::isfinite(p.b)) throw FitError("fit_scaling: B must be > 0");
        n.push_back(p.n);
        b.push_back(p.b);
        logb.push_back(std::log(p.b));
    }
    ScalingFit fit;
    const Line lin = least_squares_line(n, b);
    fit.slope = lin.slope;
    fit.intercept = lin.intercept;
    const Line ex = least_squares_line(n, logb);
    fit.rate = ex.slope;
    fit.prefactor = std::exp(ex.intercept);
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double rl = (b[i] - (fit.slope * n[i] + fit.intercept)) / b[i];
        const double re = (b[i] - fit.prefactor * std::exp(fit.rate * n[i])) / b[i];
        fit.residual_linear += rl * rl;
        fit.residual_exponential += re * re;
    }
    const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
    fit.degenerate = (*hi - *lo) <= 1e-12 * std::abs(*hi);
    if (!fit.degenerate && std::abs(fit.residual_linear - fit.residual_exponential) > 1e-12)
        fit.preferred = fit.residual_linear < fit.residual_exponential ? ScalingModel::Linear
                                                                       : ScalingModel::Exponential;
    return fit;
}

namespace {

// Lawson-Hanson non-negative least squares.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    const Eigen::Index n = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * static_cast<double>(n);

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) return;
        Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
        const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(y);
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[static_cast<Eigen::Index>(k)];
    };

    for (int outer = 0; outer < 3 * n + 10; ++outer) {
        const Eigen::VectorXd w = a.transpose() * (y - a * x);
        Eigen::Index best = -1;
        double wmax = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w[j] > wmax) {
                wmax = w[j];
                best = j;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            Eigen::VectorXd z;
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0) feasible = false;
            if (feasible) {
                x = z;
                break;
            }
            double step = 1.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z[j] <= 0.0)
                    step = std::min(step, x[j] / (x[j] - z[j]));
            x += step * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-15) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x[j] = 0.0;
                }
        }
    }
    return x;
}

}  // namespace

double monotone_spline_sse(const std::vector<double>& u, const std::vector<double>& y, int knots) {
    if (u.size() != y.size() || u.empty()) throw ValidationError("spline: bad input");
    knots = std::max(knots, 2);
    const auto [ulo, uhi] = std::minmax_element(u.begin(), u.end());
    const double lo = *ulo;
    const double width = *uhi - *ulo;
    const auto m = static_cast<Eigen::Index>(u.size());
    if (width <= 0.0) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        double sse = 0.0;
        for (double v : y) sse += (v - mean) * (v - mean);
        return sse;
    }
    const double h = width / (knots - 1);
    // g(u) = c0 + sum_i d_i R_i(u), d_i >= 0, with R_i rising from 0 at knot i
    // to 1 at knot i + 1. The free offset c0 is profiled out by centering.
    Eigen::MatrixXd a(m, knots - 1);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const double s = (u[static_cast<std::size_t>(r)] - lo) / h;
        for (int i = 0; i + 1 < knots; ++i) a(r, i) = std::clamp(s - i, 0.0, 1.0);
        rhs[r] = y[static_cast<std::size_t>(r)];
    }
    a.rowwise() -= a.colwise().mean();
    rhs.array() -= rhs.mean();
    const Eigen::VectorXd x = nnls(a, rhs);
    return (a * x - rhs).squaredNorm();
}

CollapseResult collapse_alpha(const std::vector<DecayCurve>& curves,
                              const CollapseOptions& options) {
    CollapseResult out;
    struct Pt {
        double log_n, log_nf, y;
        std::size_t curve;
    };
    std::vector<Pt> pts;
    std::size_t populated = 0;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        curves[c].validate();
        if (curves[c].n < 1) throw ValidationError("collapse: curve size must be >= 1");
        int used = 0;
        for (const auto& p : curves[c].points) {
            if (!usable(p.infidelity, options.min_infidelity, options.max_infidelity)) continue;
            pts.push_back({std::log(static_cast<double>(curves[c].n)),
                           std::log(static_cast<double>(p.n_f)), std::log(-std::log(p.infidelity)),
                           c});
            ++used;
        }
        if (used >= 2) ++populated;
    }
    if (populated < 3) {
        out.message = "need at least 3 sizes with 2 usable points each";
        return out;
    }
    const int knots = std::clamp(static_cast<int>(pts.size()) / 4, 2, 6);
    const int steps =
        static_cast<int>(std::floor((options.alpha_max - options.alpha_min) / options.alpha_step + 1e-9));
    std::vector<double> u(pts.size()), y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) y[i] = pts[i].y;
    double best = std::numeric_limits<double>::infinity();
    double best_alpha = options.alpha_min;
    for (int s = 0; s <= steps; ++s) {
        const double alpha = options.alpha_min + options.alpha_step * s;
        for (std::size_t i = 0; i < pts.size(); ++i) u[i] = pts[i].log_nf - alpha * pts[i].log_n;
        const double score = monotone_spline_sse(u, y, knots);
        out.alphas.push_back(alpha);
        out.scores.push_back(score);
        if (score < best) {
            best = score;
            best_alpha = alpha;
        }
    }
    out.score = best;

    // Every curve's rescaled range must meet some other curve's.
    std::vector<double> lo(curves.size(), 1e300), hi(curves.size(), -1e300);
    for (const auto& p : pts) {
        const double v = p.log_nf - best_alpha * p.log_n;
        lo[p.curve] = std::min(lo[p.curve], v);
        hi[p.curve] = std::max(hi[p.curve], v);
    }
    out.overlap = true;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        if (lo[c] > hi[c]) continue;
        bool meets = false;
        for (std::size_t o = 0; o < curves.size(); ++o)
            if (o != c && lo[o] <= hi[o] && lo[c] <= hi[o] && lo[o] <= hi[c]) meets = true;
        if (!meets) out.overlap = false;
    }
    if (!out.overlap) {
        out.message = "rescaled n_f ranges do not overlap";
        return out;
    }
    out.alpha = best_alpha;
    return out;
}

void to_json(nlohmann::json& j, const DecayFit& fit) {
    j = nlohmann::json{{"B", fit.b},
                       {"eta", fit.eta},
                       {"residual", fit.residual},
                       {"points_used", fit.points_used},
                       {"warnings", fit.warnings}};
}

void to_json(nlohmann::json& j, const ScalingFit& fit) {
    j = nlohmann::json{{"linear", {{"slope", fit.slope}, {"intercept", fit.intercept},
                                   {"residual", fit.residual_linear}}},
                       {"exponential", {{"prefactor", fit.prefactor}, {"rate", fit.rate},
                                        {"residual", fit.residual_exponential}}},
                       {"degenerate", fit.degenerate},
                       {"preferred", nullptr}};
    if (fit.preferred) j["preferred"] = to_string(*fit.preferred);
}

void to_json(nlohmann::json& j, const CollapseResult& result) {
    j = nlohmann::json{{"alpha", nullptr},
                       {"score", result.score},
                       {"overlap", result.overlap},
                       {"message", result.message}};
    if (result.alpha) j["alpha"] = *result.alpha;
}

}  // namespace revctl
