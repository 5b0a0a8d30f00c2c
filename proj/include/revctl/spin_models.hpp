#pragma once

// Sector-reduced Hamiltonians for the transverse-field Ising chain (with and
// without a longitudinal field) and the infinite-range LMG model,
//
//   H(Gamma) = -sum_ij J_ij sx_i sx_j - Gamma sum_i sz_i - Jx sum_i sx_i,
//
// split as H(Gamma) = h_fixed + Gamma * h_drive.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace revctl {

enum class ModelKind { IsingChain, IsingChainLongitudinal, LMG };
enum class Boundary { Open, Periodic };

std::string to_string(ModelKind kind);
std::string to_string(Boundary boundary);
ModelKind parse_model_kind(const std::string& s);
Boundary parse_boundary(const std::string& s);

struct ModelSpec {
    ModelKind kind = ModelKind::IsingChain;
    int n = 2;
    double j = 1.0;
    double jx = 0.0;
    /// Only meaningful for the chain kinds; LMG carries none.
    std::optional<Boundary> boundary = Boundary::Open;

    static ModelSpec ising(int n, Boundary b = Boundary::Open, double j = 1.0);
    static ModelSpec ising_longitudinal(int n, double jx, Boundary b = Boundary::Open,
                                        double j = 1.0);
    static ModelSpec lmg(int n, double j = 1.0);

    bool integrable() const { return kind != ModelKind::IsingChainLongitudinal; }

    /// Throws ValidationError when an invariant is violated.
    void validate() const;

    bool operator==(const ModelSpec&) const = default;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

enum class Sector { Even, Full };

struct SectorBasis {
    ModelKind kind = ModelKind::IsingChain;
    int n = 0;
    Sector sector = Sector::Even;
    /// Ising: bit i set means spin i points down. LMG: number of flipped
    /// spins k, i.e. S_z = N/2 - k.
    std::vector<std::uint64_t> codes;
    std::vector<std::string> labels;

    std::size_t dimension() const { return codes.size(); }
    /// Index of the fully polarized (all spins up) basis state.
    std::size_t polarized_index() const;
};

using SparseMatrixRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using StateVector = Eigen::VectorXcd;

/// H(Gamma) = h_fixed + Gamma * h_drive on a symmetry sector.
class HamiltonianPair {
public:
    HamiltonianPair() = default;
    HamiltonianPair(SparseMatrixRM h_fixed, SparseMatrixRM h_drive);

    const SparseMatrixRM& h_fixed() const { return h_fixed_; }
    const SparseMatrixRM& h_drive() const { return h_drive_; }
    Eigen::Index dimension() const { return h_fixed_.rows(); }

    Eigen::MatrixXd dense(double gamma) const;

    /// y = H(gamma) x.
    void apply(double gamma, const StateVector& x, StateVector& y) const;

    /// Upper bound on the induced 1-norm of H(gamma).
    double norm1_bound(double gamma) const {
        return norm1_fixed_ + std::abs(gamma) * norm1_drive_;
    }
    std::size_t nonzeros() const {
        return static_cast<std::size_t>(h_fixed_.nonZeros() + h_drive_.nonZeros());
    }

    /// True when H(gamma) is tridiagonal for every gamma (LMG sectors).
    bool tridiagonal() const { return tridiagonal_; }
    /// Diagonal and first off-diagonal of H(gamma); requires tridiagonal().
    void bands(double gamma, Eigen::VectorXd& diag, Eigen::VectorXd& sub) const;

private:
    SparseMatrixRM h_fixed_;
    SparseMatrixRM h_drive_;
    Eigen::VectorXd drive_diagonal_;
    bool drive_is_diagonal_ = false;
    bool tridiagonal_ = false;
    Eigen::VectorXd fixed_diag_, fixed_sub_, drive_diag_band_, drive_sub_;
    double norm1_fixed_ = 0.0;
    double norm1_drive_ = 0.0;
};

struct Model {
    ModelSpec spec;
    SectorBasis basis;
    HamiltonianPair pair;
};

struct BuildOptions {
    std::size_t max_dimension = std::size_t{1} << 14;
    /// Ising kinds only: use all 2^N states even when parity is conserved.
    bool full_space = false;
};

/// Builds the Hamiltonian in the sector that contains the large-Gamma ground
/// state. Throws DimensionLimitError above options.max_dimension.
Model build_model(const ModelSpec& spec, const BuildOptions& options = {});

struct Spectrum {
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // columns are orthonormal eigenvectors
};

Spectrum diagonalize(const HamiltonianPair& pair, double gamma);
/// Same, reusing a caller-owned solver (no allocation on repeat calls).
void diagonalize(const HamiltonianPair& pair, double gamma,
                 Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver);

struct GroundState {
    StateVector state;
    double energy = 0.0;
    double gap = 0.0;
    bool degenerate = false;
};

GroundState ground_state(const Model& model, double gamma);
GroundState ground_state(const ModelSpec& spec, double gamma);

/// Sign convention for eigenvectors: largest-magnitude amplitude real positive.
void fix_phase(StateVector& psi);

struct CriticalGapOptions {
    /// Sectors up to this size are diagonalized densely; larger ones by Lanczos.
    std::size_t dense_limit = 2048;
    std::size_t max_dimension = std::size_t{1} << 20;
};

/// Gap between the two lowest levels of H(J) in the ground-state sector.
double critical_gap(const ModelSpec& spec, const CriticalGapOptions& options = {});

}  // namespace revctl
