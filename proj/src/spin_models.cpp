#include "revctl/spin_models.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "revctl/error.hpp"
#include "revctl/lanczos.hpp"

namespace revctl {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::IsingChain: return "IsingChain";
        case ModelKind::IsingChainLongitudinal: return "IsingChainLongitudinal";
        case ModelKind::LMG: return "LMG";
    }
    return "?";
}

std::string to_string(Boundary boundary) {
    return boundary == Boundary::Open ? "open" : "periodic";
}

ModelKind parse_model_kind(const std::string& s) {
    if (s == "IsingChain") return ModelKind::IsingChain;
    if (s == "IsingChainLongitudinal") return ModelKind::IsingChainLongitudinal;
    if (s == "LMG") return ModelKind::LMG;
    throw ValidationError("unknown model kind '" + s +
                          "' (expected IsingChain, IsingChainLongitudinal or LMG)");
}

Boundary parse_boundary(const std::string& s) {
    if (s == "open") return Boundary::Open;
    if (s == "periodic") return Boundary::Periodic;
    throw ValidationError("unknown boundary '" + s + "' (expected open or periodic)");
}

ModelSpec ModelSpec::ising(int n, Boundary b, double j) {
    return ModelSpec{ModelKind::IsingChain, n, j, 0.0, b};
}

ModelSpec ModelSpec::ising_longitudinal(int n, double jx, Boundary b, double j) {
    return ModelSpec{ModelKind::IsingChainLongitudinal, n, j, jx, b};
}

ModelSpec ModelSpec::lmg(int n, double j) {
    return ModelSpec{ModelKind::LMG, n, j, 0.0, std::nullopt};
}

void ModelSpec::validate() const {
    if (n < 2) throw ValidationError("model: n must be >= 2");
    if (n > 62) throw ValidationError("model: n must be <= 62");
    if (!(j > 0.0) || !std::isfinite(j)) throw ValidationError("model: j must be > 0");
    if (!std::isfinite(jx)) throw ValidationError("model: jx must be finite");
    switch (kind) {
        case ModelKind::IsingChain:
        case ModelKind::LMG:
            if (jx != 0.0) throw ValidationError("model: jx must be 0 for " + to_string(kind));
            break;
        case ModelKind::IsingChainLongitudinal:
            if (jx == 0.0) throw ValidationError("model: IsingChainLongitudinal requires jx != 0");
            break;
    }
    if (kind == ModelKind::LMG) {
        if (boundary) throw ValidationError("model: LMG carries no boundary");
    } else {
        if (!boundary) throw ValidationError("model: chain kinds require a boundary");
        if (*boundary == Boundary::Periodic && n < 3)
            throw ValidationError("model: periodic boundary needs n >= 3");
    }
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)},
                       {"n", spec.n},
                       {"j", spec.j},
                       {"jx", spec.jx},
                       {"boundary", nullptr}};
    if (spec.boundary) j["boundary"] = to_string(*spec.boundary);
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
    if (!j.is_object()) throw ValidationError("model: expected a JSON object");
    ModelSpec out;
    out.kind = parse_model_kind(j.at("kind").get<std::string>());
    out.n = j.at("n").get<int>();
    out.j = j.value("j", 1.0);
    out.jx = j.value("jx", 0.0);
    if (out.kind == ModelKind::LMG) {
        out.boundary = std::nullopt;
        if (j.contains("boundary") && !j["boundary"].is_null())
            throw ValidationError("model: LMG carries no boundary");
    } else if (j.contains("boundary") && !j["boundary"].is_null()) {
        out.boundary = parse_boundary(j["boundary"].get<std::string>());
    } else {
        out.boundary = Boundary::Open;
    }
    out.validate();
    spec = out;
}

std::size_t SectorBasis::polarized_index() const {
    for (std::size_t i = 0; i < codes.size(); ++i)
        if (codes[i] == 0) return i;
    throw Error("basis: polarized state missing");
}

HamiltonianPair::HamiltonianPair(SparseMatrixRM h_fixed, SparseMatrixRM h_drive)
    : h_fixed_(std::move(h_fixed)), h_drive_(std::move(h_drive)) {
    if (h_fixed_.rows() != h_fixed_.cols() || h_drive_.rows() != h_drive_.cols() ||
        h_fixed_.rows() != h_drive_.rows())
        throw ValidationError("hamiltonian: matrices must be square and equally sized");
    h_fixed_.makeCompressed();
    h_drive_.makeCompressed();

    auto norm1 = [](const SparseMatrixRM& m) {
        // Symmetric, so the row-sum norm equals the column-sum norm.
        double best = 0.0;
        for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
            double s = 0.0;
            for (SparseMatrixRM::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
            best = std::max(best, s);
        }
        return best;
    };
    norm1_fixed_ = norm1(h_fixed_);
    norm1_drive_ = norm1(h_drive_);

    drive_is_diagonal_ = true;
    drive_diagonal_ = Eigen::VectorXd::Zero(h_drive_.rows());
    for (Eigen::Index r = 0; r < h_drive_.outerSize() && drive_is_diagonal_; ++r)
        for (SparseMatrixRM::InnerIterator it(h_drive_, r); it; ++it) {
            if (it.col() != r) {
                drive_is_diagonal_ = false;
                break;
            }
            drive_diagonal_[r] += it.value();
        }

    const Eigen::Index n = h_fixed_.rows();
    tridiagonal_ = true;
    fixed_diag_ = drive_diag_band_ = Eigen::VectorXd::Zero(n);
    fixed_sub_ = drive_sub_ = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 1, 0));
    auto split = [&](const SparseMatrixRM& m, Eigen::VectorXd& diag, Eigen::VectorXd& sub) {
        for (Eigen::Index r = 0; r < m.outerSize(); ++r)
            for (SparseMatrixRM::InnerIterator it(m, r); it; ++it) {
                if (it.col() == r)
                    diag[r] += it.value();
                else if (it.col() == r + 1)
                    sub[r] += it.value();
                else if (it.col() != r - 1)
                    tridiagonal_ = false;
            }
    };
    split(h_fixed_, fixed_diag_, fixed_sub_);
    split(h_drive_, drive_diag_band_, drive_sub_);
}

void HamiltonianPair::bands(double gamma, Eigen::VectorXd& diag, Eigen::VectorXd& sub) const {
    if (!tridiagonal_) throw Error("hamiltonian: not tridiagonal");
    diag = fixed_diag_ + gamma * drive_diag_band_;
    sub = fixed_sub_ + gamma * drive_sub_;
}

Eigen::MatrixXd HamiltonianPair::dense(double gamma) const {
    Eigen::MatrixXd h = Eigen::MatrixXd(h_fixed_);
    h += gamma * Eigen::MatrixXd(h_drive_);
    return h;
}

void HamiltonianPair::apply(double gamma, const StateVector& x, StateVector& y) const {
    const Eigen::Index dim = h_fixed_.rows();
    y.resize(dim);
    const int* outer = h_fixed_.outerIndexPtr();
    const int* inner = h_fixed_.innerIndexPtr();
    const double* val = h_fixed_.valuePtr();
    const std::complex<double>* xp = x.data();
    std::complex<double>* yp = y.data();
    if (drive_is_diagonal_) {
        const double* d = drive_diagonal_.data();
        for (Eigen::Index r = 0; r < dim; ++r) {
            double re = gamma * d[r] * xp[r].real();
            double im = gamma * d[r] * xp[r].imag();
            for (int k = outer[r]; k < outer[r + 1]; ++k) {
                re += val[k] * xp[inner[k]].real();
                im += val[k] * xp[inner[k]].imag();
            }
            yp[r] = {re, im};
        }
        return;
    }
    const int* douter = h_drive_.outerIndexPtr();
    const int* dinner = h_drive_.innerIndexPtr();
    const double* dval = h_drive_.valuePtr();
    for (Eigen::Index r = 0; r < dim; ++r) {
        double re = 0.0, im = 0.0;
        for (int k = outer[r]; k < outer[r + 1]; ++k) {
            re += val[k] * xp[inner[k]].real();
            im += val[k] * xp[inner[k]].imag();
        }
        for (int k = douter[r]; k < douter[r + 1]; ++k) {
            re += gamma * dval[k] * xp[dinner[k]].real();
            im += gamma * dval[k] * xp[dinner[k]].imag();
        }
        yp[r] = {re, im};
    }
}

namespace {

std::string bit_label(std::uint64_t code, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int i = 0; i < n; ++i)
        if ((code >> i) & 1U) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

Model build_ising(const ModelSpec& spec, const BuildOptions& options) {
    const int n = spec.n;
    const bool full = spec.jx != 0.0 || options.full_space;
    const std::uint64_t full_dim = std::uint64_t{1} << n;
    const std::uint64_t dim = full ? full_dim : full_dim / 2;
    if (dim > options.max_dimension) {
        std::ostringstream msg;
        msg << "model: sector dimension " << dim << " exceeds the cap " << options.max_dimension
            << " (N = " << n << ")";
        throw DimensionLimitError(msg.str());
    }

    Model model;
    model.spec = spec;
    SectorBasis& basis = model.basis;
    basis.kind = spec.kind;
    basis.n = n;
    basis.sector = full ? Sector::Full : Sector::Even;
    basis.codes.reserve(dim);
    std::vector<std::int64_t> index(full_dim, -1);
    for (std::uint64_t c = 0; c < full_dim; ++c) {
        if (!full && (std::popcount(c) % 2) != 0) continue;
        index[c] = static_cast<std::int64_t>(basis.codes.size());
        basis.codes.push_back(c);
    }
    basis.labels.reserve(dim);
    for (auto c : basis.codes) basis.labels.push_back(bit_label(c, n));

    const int bonds = (spec.boundary == Boundary::Periodic) ? n : n - 1;
    std::vector<Eigen::Triplet<double>> fixed, drive;
    fixed.reserve(dim * static_cast<std::uint64_t>(bonds + (full ? n : 0)));
    drive.reserve(dim);
    for (std::uint64_t row = 0; row < dim; ++row) {
        const std::uint64_t c = basis.codes[row];
        const int down = std::popcount(c);
        drive.emplace_back(static_cast<int>(row), static_cast<int>(row),
                           -static_cast<double>(n - 2 * down));
        for (int b = 0; b < bonds; ++b) {
            const int i = b;
            const int k = (b + 1) % n;
            const std::uint64_t flipped = c ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << k));
            fixed.emplace_back(static_cast<int>(row), static_cast<int>(index[flipped]), -spec.j);
        }
        if (full) {
            for (int i = 0; i < n; ++i) {
                const std::uint64_t flipped = c ^ (std::uint64_t{1} << i);
                fixed.emplace_back(static_cast<int>(row), static_cast<int>(index[flipped]),
                                   -spec.jx);
            }
        }
    }
    const auto d = static_cast<Eigen::Index>(dim);
    SparseMatrixRM hf(d, d), hd(d, d);
    hf.setFromTriplets(fixed.begin(), fixed.end());
    hd.setFromTriplets(drive.begin(), drive.end());
    model.pair = HamiltonianPair(std::move(hf), std::move(hd));
    return model;
}

Model build_lmg(const ModelSpec& spec) {
    const int n = spec.n;
    const double s = 0.5 * n;
    const double casimir = s * (s + 1.0);

    Model model;
    model.spec = spec;
    SectorBasis& basis = model.basis;
    basis.kind = spec.kind;
    basis.n = n;
    basis.sector = Sector::Even;
    for (int k = 0; k <= n; k += 2) {
        basis.codes.push_back(static_cast<std::uint64_t>(k));
        std::ostringstream label;
        label << "Sz=" << (s - k);
        basis.labels.push_back(label.str());
    }
    const auto dim = static_cast<Eigen::Index>(basis.codes.size());

    // h_fixed = -(2J/N) Sx^2 (constant J/2 dropped), h_drive = -2 Sz.
    const double scale = -2.0 * spec.j / n;
    std::vector<Eigen::Triplet<double>> fixed, drive;
    for (Eigen::Index row = 0; row < dim; ++row) {
        const double m = s - 2.0 * static_cast<double>(row);
        drive.emplace_back(row, row, -2.0 * m);
        fixed.emplace_back(row, row, scale * 0.5 * (casimir - m * m));
        if (row + 1 < dim) {
            // <m|Sx^2|m-2> = (1/4) sqrt[(S(S+1) - m(m-1)) (S(S+1) - (m-1)(m-2))]
            const double v =
                0.25 * std::sqrt((casimir - m * (m - 1.0)) * (casimir - (m - 1.0) * (m - 2.0)));
            fixed.emplace_back(row, row + 1, scale * v);
            fixed.emplace_back(row + 1, row, scale * v);
        }
    }
    SparseMatrixRM hf(dim, dim), hd(dim, dim);
    hf.setFromTriplets(fixed.begin(), fixed.end());
    hd.setFromTriplets(drive.begin(), drive.end());
    model.pair = HamiltonianPair(std::move(hf), std::move(hd));
    return model;
}

}  // namespace

Model build_model(const ModelSpec& spec, const BuildOptions& options) {
    spec.validate();
    if (spec.kind == ModelKind::LMG) return build_lmg(spec);
    return build_ising(spec, options);
}

void diagonalize(const HamiltonianPair& pair, double gamma,
                 Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver) {
    if (!std::isfinite(gamma)) throw ValidationError("diagonalize: gamma must be finite");
    if (pair.tridiagonal() && pair.dimension() > 1) {
        Eigen::VectorXd diag, sub;
        pair.bands(gamma, diag, sub);
        solver.computeFromTridiagonal(diag, sub);
    } else {
        solver.compute(pair.dense(gamma));
    }
    if (solver.info() != Eigen::Success) throw Error("diagonalize: eigensolver failed");
}

Spectrum diagonalize(const HamiltonianPair& pair, double gamma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    diagonalize(pair, gamma, solver);
    return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

void fix_phase(StateVector& psi) {
    Eigen::Index idx = 0;
    psi.cwiseAbs().maxCoeff(&idx);
    const auto a = psi[idx];
    if (std::abs(a) == 0.0) return;
    psi *= std::conj(a) / std::abs(a);
    psi[idx] = std::abs(psi[idx]);
}

GroundState ground_state(const Model& model, double gamma) {
    const Spectrum spec = diagonalize(model.pair, gamma);
    GroundState gs;
    gs.state = spec.vectors.col(0).cast<std::complex<double>>();
    fix_phase(gs.state);
    gs.energy = spec.energies[0];
    gs.gap = spec.energies.size() > 1 ? spec.energies[1] - spec.energies[0] : 0.0;
    gs.degenerate = spec.energies.size() > 1 && gs.gap < 1e-12;
    return gs;
}

GroundState ground_state(const ModelSpec& spec, double gamma) {
    return ground_state(build_model(spec), gamma);
}

double critical_gap(const ModelSpec& spec, const CriticalGapOptions& options) {
    spec.validate();
    if (!spec.integrable())
        throw ValidationError("critical_gap: defined for the integrable kinds only");
    const Model model = build_model(spec, BuildOptions{options.max_dimension});
    const double gamma_c = spec.j;
    if (model.basis.dimension() <= options.dense_limit) {
        const Spectrum s = diagonalize(model.pair, gamma_c);
        return s.energies[1] - s.energies[0];
    }
    SparseMatrixRM h = model.pair.h_fixed() + gamma_c * model.pair.h_drive();
    const Eigen::VectorXd low = lanczos_lowest(h, 2);
    return low[1] - low[0];
}

}  // namespace revctl
