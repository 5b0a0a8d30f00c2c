#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>

namespace revctl {

struct LanczosOptions {
    int max_iterations = 400;
    double tolerance = 1e-11;
    std::uint64_t seed = 12345;
};

/// Lowest `count` eigenvalues of a real symmetric sparse matrix via Lanczos
/// with full reorthogonalization.
Eigen::VectorXd lanczos_lowest(const Eigen::SparseMatrix<double, Eigen::RowMajor>& h, int count,
                               const LanczosOptions& options = {});

}  // namespace revctl
