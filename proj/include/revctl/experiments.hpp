#pragma once

// Experiment runners behind the revctl CLI: disordering, reversal under
// noise, n_f scans, and B(N) scaling. Each runner validates the whole
// configuration before writing anything.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "revctl/analysis.hpp"
#include "revctl/crab.hpp"
#include "revctl/dynamics.hpp"
#include "revctl/error.hpp"
#include "revctl/protocols.hpp"
#include "revctl/spin_models.hpp"

namespace revctl {

class ConfigError : public ValidationError {
public:
    explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

struct DisorderConfig {
    double gamma1 = 10.0;
    double gamma2 = 0.5;
    /// Maximum waiting time; defaults to gap_factor / critical gap.
    std::optional<double> t_max;
    double gap_factor = 100.0;
    /// 0 is accepted by `quench` and means no disordering at all.
    int n_cycles = 50;
    std::uint64_t seed = 1;
};

struct ControlConfig {
    double total_time = 100.0;
    std::vector<int> n_f{2, 4, 6, 8};
    /// Start of the linear-ramp guess; defaults to the field at the end of
    /// disordering (or disorder.gamma2 when there is none).
    std::optional<double> guess_start;
    OptimizerConfig optimizer;
    /// Infidelity counted as "solved" in scan summaries.
    double target_infidelity = 1e-2;
};

struct NoiseConfig {
    std::vector<double> xi;
    int seeds = 10;
    int correlation_step = 1;
    std::uint64_t seed = 7;
    /// Harmonics of the optimized return; 0 picks the largest control n_f.
    int n_f = 0;
};

struct SweepConfig {
    std::vector<int> n;
    int seeds = 1;
    std::vector<double> jx{0.0, 0.5};
    std::vector<std::string> transitions{"ms", "c"};
};

struct FitConfig {
    std::vector<std::string> inputs;
    std::optional<double> eta;
    std::string transition = "ms";
    double max_infidelity = 0.9;
    double min_infidelity = 0.0;
};

struct ExperimentConfig {
    ModelSpec model;
    double initial_gamma = 10.0;
    std::optional<double> dt;
    std::size_t sample_stride = 0;
    std::size_t max_dimension = std::size_t{1} << 14;
    DisorderConfig disorder;
    std::optional<DisorderConfig> disorder_short;
    ControlConfig control;
    NoiseConfig noise;
    SweepConfig sweep;
    FitConfig fit;
    std::string output_dir = "revctl_out";
    /// The document the config was parsed from (hashed into every output).
    nlohmann::json source;

    double step() const { return dt ? *dt : default_dt(control.total_time); }
    std::vector<int> sizes() const { return sweep.n.empty() ? std::vector<int>{model.n} : sweep.n; }
};

ExperimentConfig parse_config(const nlohmann::json& doc);
/// Parses JSON text; syntax errors are reported with line and column.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
    int workers = 1;
    std::uint64_t seed_offset = 0;
    /// Overrides the config's output_dir when non-empty.
    std::filesystem::path output_dir;
    bool write_outputs = true;
};

/// Disordering run with per-segment diagnostics.
struct Disordering {
    Pulse pulse;
    TrajectoryRecord trajectory;
    std::vector<double> segment_entropy;  // at each segment end, own eigenbasis
    std::vector<double> segment_gamma;
    std::vector<StateVector> segment_states;
    /// Mean segment-end S_d over the last 20% of segments.
    double plateau = 0.0;
    /// Means of the two halves of that window differ by < 2%.
    bool plateau_reached = false;
    StateVector final_state;
};

Disordering run_disordering(Propagator& propagator, const StateVector& initial,
                            const QuenchSpec& spec, double dt, std::size_t stride);

/// Plateau estimate and detection flag from segment-end entropies.
std::pair<double, bool> plateau_estimate(const std::vector<double>& segment_entropy);

/// Index of the latest segment whose S_d lies within 10% of the plateau.
std::size_t max_entropy_segment(const Disordering& d);

/// Sector eigenstate of H(gamma) closest to the spectrum midpoint (ties to
/// the lower index).
StateVector center_eigenstate(const HamiltonianPair& pair, double gamma);

/// First crossing of `level` by a median curve, log-log interpolated.
struct Threshold {
    std::optional<double> xi;
    /// "interpolated", "below_grid" (already above level at the smallest xi)
    /// or "above_grid" (never reaches it).
    std::string kind;
};
Threshold crossing_threshold(const std::vector<double>& xi, const std::vector<double>& median,
                             double level);

// ---------------------------------------------------------------- quench

struct QuenchSeedResult {
    int seed_index = 0;
    double plateau = 0.0;
    bool plateau_reached = false;
    TrajectoryRecord trajectory;
};

struct QuenchResult {
    double gap = 0.0;
    double t_max = 0.0;
    double ln_dimension = 0.0;
    std::vector<QuenchSeedResult> seeds;
    double mean_plateau = 0.0;
    /// mean_plateau / ln(dimension)
    double ratio = 0.0;
};

QuenchResult run_quench(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------- reverse

struct ReverseRow {
    std::string method;
    double xi = 0.0;
    std::vector<double> infidelity;  // one per noise seed
    double median = 0.0;
};

struct ReverseResult {
    double gap = 0.0;
    double t_max = 0.0;
    double disorder_duration = 0.0;
    double disorder_entropy = 0.0;
    OptimizationReport optimization;
    double optimized_entropy = 0.0;
    std::vector<ReverseRow> rows;
    std::map<std::string, Threshold> thresholds;
    /// xi*(optimized) / xi*(reversed) when both are interpolated.
    std::optional<double> ratio;
    bool converged = true;
};

ReverseResult run_reverse(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------- freq-scan

struct ScanPoint {
    int n_f = 0;
    double infidelity = 1.0;
    long evaluations = 0;
    bool converged = false;
};

struct TransitionRun {
    std::string transition;
    int seed_index = 0;
    std::vector<ScanPoint> points;
};

struct SizeScan {
    ModelSpec model;
    double gap = 0.0;
    double t_max = 0.0;
    double ms_entropy = 0.0;
    double plateau = 0.0;
    std::vector<TransitionRun> runs;
    /// Best over seeds, per transition.
    std::map<std::string, DecayCurve> curves;
    std::map<std::string, std::optional<DecayFit>> fits;
    std::map<std::string, std::string> fit_errors;
};

struct FreqScanResult {
    std::vector<SizeScan> sizes;
    std::map<std::string, CollapseResult> collapse;
    bool converged = true;
};

FreqScanResult run_freq_scan(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------- scaling

struct ScalingSeries {
    double jx = 0.0;
    FreqScanResult scan;
    std::vector<ScalingPoint> points;
    std::optional<ScalingFit> fit;
    std::string message;
};

struct ScalingResult {
    std::vector<ScalingSeries> series;
    bool converged = true;
};

ScalingResult run_scaling(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------- fit

struct FitResult {
    std::vector<DecayCurve> curves;
    std::vector<std::pair<int, std::optional<DecayFit>>> fits;
    std::optional<ScalingFit> scaling;
    CollapseResult collapse;
    std::vector<std::string> messages;
};

/// Fits decay tables written by freq-scan (config.fit.inputs).
FitResult run_fit(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace revctl
