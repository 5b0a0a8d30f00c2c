#include "revctl/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "revctl/error.hpp"
#include "revctl/rng.hpp"

namespace revctl {

Eigen::VectorXd lanczos_lowest(const Eigen::SparseMatrix<double, Eigen::RowMajor>& h, int count,
                               const LanczosOptions& options) {
    const Eigen::Index dim = h.rows();
    if (count < 1 || dim < count) throw ValidationError("lanczos: invalid eigenvalue count");
    const int max_iter = static_cast<int>(std::min<Eigen::Index>(options.max_iterations, dim));

    Rng rng(options.seed);
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.uniform(-1.0, 1.0);
    v.normalize();

    std::vector<Eigen::VectorXd> basis;
    basis.reserve(static_cast<std::size_t>(max_iter));
    std::vector<double> alpha, beta;
    Eigen::VectorXd previous = Eigen::VectorXd::Constant(count, 1e300);
    Eigen::VectorXd ritz;

    for (int it = 0; it < max_iter; ++it) {
        basis.push_back(v);
        Eigen::VectorXd w = h * v;
        const double a = v.dot(w);
        alpha.push_back(a);
        // Full reorthogonalization, twice.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= q.dot(w) * q;
        const double b = w.norm();

        const int m = static_cast<int>(alpha.size());
        if (m >= count && (m % 5 == 0 || b < 1e-13 || it + 1 == max_iter)) {
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
            Eigen::VectorXd sub(std::max(m - 1, 0));
            for (int i = 0; i + 1 < m; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
            tri.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
            ritz = tri.eigenvalues().head(count);
            if ((ritz - previous).cwiseAbs().maxCoeff() <
                    options.tolerance * std::max(1.0, ritz.cwiseAbs().maxCoeff()) ||
                b < 1e-13)
                return ritz;
            previous = ritz;
        }
        if (b < 1e-13) break;
        beta.push_back(b);
        v = w / b;
    }
    if (ritz.size() == count) return ritz;
    throw Error("lanczos: failed to converge");
}

}  // namespace revctl
