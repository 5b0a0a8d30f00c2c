#include "revctl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <string_view>
#include <thread>

#include "revctl/io.hpp"
#include "revctl/rng.hpp"

namespace revctl {

using nlohmann::json;

// ================================================================ config

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void allow_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) fail(path.empty() ? "/" : path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
            fail(path + "/" + it.key(), "unknown key");
}

bool present(const json& obj, const char* key) { return obj.contains(key) && !obj[key].is_null(); }

double number(const json& obj, const std::string& path, const char* key, double def) {
    if (!present(obj, key)) return def;
    if (!obj[key].is_number()) fail(path + "/" + key, "expected a number");
    const double v = obj[key].get<double>();
    if (!std::isfinite(v)) fail(path + "/" + key, "must be finite");
    return v;
}

std::optional<double> optional_number(const json& obj, const std::string& path, const char* key) {
    if (!present(obj, key)) return std::nullopt;
    return number(obj, path, key, 0.0);
}

long long integer(const json& obj, const std::string& path, const char* key, long long def) {
    if (!present(obj, key)) return def;
    const json& v = obj[key];
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(path + "/" + key, "expected an integer");
}

std::uint64_t seed_value(const json& obj, const std::string& path, const char* key,
                         std::uint64_t def) {
    const long long v = integer(obj, path, key, static_cast<long long>(def));
    if (v < 0) fail(path + "/" + key, "seed must be >= 0");
    return static_cast<std::uint64_t>(v);
}

bool boolean(const json& obj, const std::string& path, const char* key, bool def) {
    if (!present(obj, key)) return def;
    if (!obj[key].is_boolean()) fail(path + "/" + key, "expected true or false");
    return obj[key].get<bool>();
}

std::string string_value(const json& obj, const std::string& path, const char* key,
                         const std::string& def) {
    if (!present(obj, key)) return def;
    if (!obj[key].is_string()) fail(path + "/" + key, "expected a string");
    return obj[key].get<std::string>();
}

template <class T>
std::vector<T> list(const json& obj, const std::string& path, const char* key,
                    const std::vector<T>& def) {
    if (!present(obj, key)) return def;
    const json& v = obj[key];
    if (!v.is_array()) fail(path + "/" + key, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = path + "/" + key + "/" + std::to_string(i);
        if constexpr (std::is_same_v<T, int>) {
            if (!v[i].is_number_integer()) fail(p, "expected an integer");
            out.push_back(v[i].get<int>());
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v[i].is_number()) fail(p, "expected a number");
            out.push_back(v[i].get<double>());
        } else {
            if (!v[i].is_string()) fail(p, "expected a string");
            out.push_back(v[i].get<std::string>());
        }
    }
    return out;
}

DisorderConfig parse_disorder(const json& obj, const std::string& path) {
    allow_keys(obj, path, {"gamma1", "gamma2", "t_max", "gap_factor", "n_cycles", "seed"});
    DisorderConfig d;
    d.gamma1 = number(obj, path, "gamma1", d.gamma1);
    d.gamma2 = number(obj, path, "gamma2", d.gamma2);
    d.t_max = optional_number(obj, path, "t_max");
    if (d.t_max && !(*d.t_max > 0.0)) fail(path + "/t_max", "must be > 0");
    d.gap_factor = number(obj, path, "gap_factor", d.gap_factor);
    if (!(d.gap_factor > 0.0)) fail(path + "/gap_factor", "must be > 0");
    const long long cycles = integer(obj, path, "n_cycles", d.n_cycles);
    if (cycles < 0 || cycles > 1000000) fail(path + "/n_cycles", "must be in [0, 1e6]");
    d.n_cycles = static_cast<int>(cycles);
    d.seed = seed_value(obj, path, "seed", d.seed);
    return d;
}

OptimizerConfig parse_optimizer(const json& obj, const std::string& path) {
    allow_keys(obj, path,
               {"max_evaluations", "initial_scale", "tolerance", "n_restarts", "n_basis_draws",
                "optimize_frequencies", "seed", "stop_infidelity"});
    OptimizerConfig o;
    o.max_evaluations = static_cast<int>(integer(obj, path, "max_evaluations", o.max_evaluations));
    o.initial_scale = number(obj, path, "initial_scale", o.initial_scale);
    o.tolerance = number(obj, path, "tolerance", o.tolerance);
    o.n_restarts = static_cast<int>(integer(obj, path, "n_restarts", o.n_restarts));
    o.n_basis_draws = static_cast<int>(integer(obj, path, "n_basis_draws", o.n_basis_draws));
    o.optimize_frequencies = boolean(obj, path, "optimize_frequencies", o.optimize_frequencies);
    o.seed = seed_value(obj, path, "seed", o.seed);
    o.target_infidelity = number(obj, path, "stop_infidelity", o.target_infidelity);
    try {
        o.validate();
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
    return o;
}

void check_transition(const std::string& t, const std::string& path) {
    if (t != "ms" && t != "c") fail(path, "transition must be \"ms\" or \"c\"");
}

std::size_t sector_dimension(const ModelSpec& spec) {
    if (spec.kind == ModelKind::LMG) return static_cast<std::size_t>(spec.n / 2 + 1);
    const std::size_t full = std::size_t{1} << spec.n;
    return spec.jx != 0.0 ? full : full / 2;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    allow_keys(doc, "",
               {"model", "initial_gamma", "dt", "sample_stride", "max_dimension", "disorder",
                "disorder_short", "control", "noise", "sweep", "fit", "output_dir"});
    ExperimentConfig c;
    c.source = doc;
    if (!present(doc, "model")) fail("/model", "required");
    try {
        c.model = doc["model"].get<ModelSpec>();
    } catch (const ValidationError& e) {
        fail("/model", e.what());
    } catch (const json::exception& e) {
        fail("/model", e.what());
    }
    if (doc["model"].is_object()) allow_keys(doc["model"], "/model", {"kind", "n", "j", "jx", "boundary"});

    c.initial_gamma = number(doc, "", "initial_gamma", c.initial_gamma);
    c.dt = optional_number(doc, "", "dt");
    if (c.dt && !(*c.dt > 0.0)) fail("/dt", "must be > 0");
    const long long stride = integer(doc, "", "sample_stride", 0);
    if (stride < 0) fail("/sample_stride", "must be >= 0");
    c.sample_stride = static_cast<std::size_t>(stride);
    const long long cap = integer(doc, "", "max_dimension", static_cast<long long>(c.max_dimension));
    if (cap < 1) fail("/max_dimension", "must be >= 1");
    c.max_dimension = static_cast<std::size_t>(cap);

    if (present(doc, "disorder")) c.disorder = parse_disorder(doc["disorder"], "/disorder");
    if (present(doc, "disorder_short")) {
        c.disorder_short = parse_disorder(doc["disorder_short"], "/disorder_short");
        if (c.disorder_short->n_cycles < 1) fail("/disorder_short/n_cycles", "must be >= 1");
    }

    if (present(doc, "control")) {
        const json& ctl = doc["control"];
        const std::string p = "/control";
        allow_keys(ctl, p, {"total_time", "n_f", "guess_start", "optimizer", "target_infidelity"});
        c.control.total_time = number(ctl, p, "total_time", c.control.total_time);
        if (!(c.control.total_time > 0.0)) fail(p + "/total_time", "must be > 0");
        c.control.n_f = list<int>(ctl, p, "n_f", c.control.n_f);
        c.control.guess_start = optional_number(ctl, p, "guess_start");
        c.control.target_infidelity =
            number(ctl, p, "target_infidelity", c.control.target_infidelity);
        if (!(c.control.target_infidelity > 0.0 && c.control.target_infidelity <= 1.0))
            fail(p + "/target_infidelity", "must be in (0, 1]");
        if (present(ctl, "optimizer")) c.control.optimizer = parse_optimizer(ctl["optimizer"], p + "/optimizer");
    }
    if (c.control.n_f.empty()) fail("/control/n_f", "must not be empty");
    for (std::size_t i = 0; i < c.control.n_f.size(); ++i) {
        if (c.control.n_f[i] < 1) fail("/control/n_f/" + std::to_string(i), "must be >= 1");
        if (i > 0 && c.control.n_f[i] <= c.control.n_f[i - 1])
            fail("/control/n_f", "must be strictly increasing");
    }

    if (present(doc, "noise")) {
        const json& nz = doc["noise"];
        const std::string p = "/noise";
        allow_keys(nz, p, {"xi", "seeds", "correlation_step", "seed", "n_f"});
        c.noise.xi = list<double>(nz, p, "xi", {});
        c.noise.seeds = static_cast<int>(integer(nz, p, "seeds", c.noise.seeds));
        c.noise.correlation_step =
            static_cast<int>(integer(nz, p, "correlation_step", c.noise.correlation_step));
        c.noise.seed = seed_value(nz, p, "seed", c.noise.seed);
        c.noise.n_f = static_cast<int>(integer(nz, p, "n_f", c.noise.n_f));
    }
    if (c.noise.xi.empty())
        for (int k = 0; k <= 14; ++k) c.noise.xi.push_back(std::pow(10.0, -7.0 + 0.5 * k));
    for (std::size_t i = 0; i < c.noise.xi.size(); ++i) {
        if (!(c.noise.xi[i] >= 0.0) || !std::isfinite(c.noise.xi[i]))
            fail("/noise/xi/" + std::to_string(i), "must be >= 0");
        if (i > 0 && c.noise.xi[i] <= c.noise.xi[i - 1]) fail("/noise/xi", "must be strictly increasing");
    }
    if (c.noise.seeds < 1) fail("/noise/seeds", "must be >= 1");
    if (c.noise.correlation_step < 1) fail("/noise/correlation_step", "must be >= 1");
    if (c.noise.n_f < 0) fail("/noise/n_f", "must be >= 0");

    if (present(doc, "sweep")) {
        const json& sw = doc["sweep"];
        const std::string p = "/sweep";
        allow_keys(sw, p, {"n", "seeds", "jx", "transitions"});
        c.sweep.n = list<int>(sw, p, "n", {});
        c.sweep.seeds = static_cast<int>(integer(sw, p, "seeds", c.sweep.seeds));
        c.sweep.jx = list<double>(sw, p, "jx", c.sweep.jx);
        c.sweep.transitions = list<std::string>(sw, p, "transitions", c.sweep.transitions);
    }
    if (c.sweep.seeds < 1) fail("/sweep/seeds", "must be >= 1");
    if (c.sweep.transitions.empty()) fail("/sweep/transitions", "must not be empty");
    for (std::size_t i = 0; i < c.sweep.transitions.size(); ++i)
        check_transition(c.sweep.transitions[i], "/sweep/transitions/" + std::to_string(i));
    for (std::size_t i = 0; i < c.sweep.n.size(); ++i) {
        ModelSpec s = c.model;
        s.n = c.sweep.n[i];
        try {
            s.validate();
        } catch (const ValidationError& e) {
            fail("/sweep/n/" + std::to_string(i), e.what());
        }
    }

    if (present(doc, "fit")) {
        const json& ft = doc["fit"];
        const std::string p = "/fit";
        allow_keys(ft, p, {"inputs", "eta", "transition", "max_infidelity", "min_infidelity"});
        c.fit.inputs = list<std::string>(ft, p, "inputs", {});
        if (present(ft, "eta")) {
            if (ft["eta"].is_string()) {
                if (ft["eta"].get<std::string>() != "free") fail(p + "/eta", "expected \"free\" or a number");
            } else {
                c.fit.eta = number(ft, p, "eta", 0.0);
                if (!(*c.fit.eta > 0.0)) fail(p + "/eta", "must be > 0");
            }
        }
        c.fit.transition = string_value(ft, p, "transition", c.fit.transition);
        check_transition(c.fit.transition, p + "/transition");
        c.fit.max_infidelity = number(ft, p, "max_infidelity", c.fit.max_infidelity);
        c.fit.min_infidelity = number(ft, p, "min_infidelity", c.fit.min_infidelity);
        if (!(c.fit.min_infidelity >= 0.0 && c.fit.min_infidelity < c.fit.max_infidelity &&
              c.fit.max_infidelity <= 1.0))
            fail(p, "need 0 <= min_infidelity < max_infidelity <= 1");
    }
    c.output_dir = string_value(doc, "", "output_dir", c.output_dir);
    if (c.output_dir.empty()) fail("/output_dir", "must not be empty");
    return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    return parse_config_text(text);
}

// ================================================================ helpers

namespace {

template <class F>
void parallel_for(std::size_t count, int workers, F&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    const auto n = static_cast<std::size_t>(workers) < count ? static_cast<std::size_t>(workers) : count;
    for (std::size_t w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::filesystem::path output_root(const ExperimentConfig& c, const RunOptions& o) {
    return o.output_dir.empty() ? std::filesystem::path(c.output_dir) : o.output_dir;
}

void check_dimension(const ModelSpec& spec, std::size_t cap, const std::string& what) {
    const std::size_t d = sector_dimension(spec);
    if (d > cap) {
        std::ostringstream msg;
        msg << what << ": N = " << spec.n << " needs dimension " << d << " above max_dimension "
            << cap;
        throw ConfigError(msg.str());
    }
}

ModelSpec with_size(ModelSpec spec, int n) {
    spec.n = n;
    return spec;
}

double gap_for(const ModelSpec& spec) {
    if (spec.integrable()) return critical_gap(spec);
    ModelSpec base = ModelSpec::ising(spec.n, spec.boundary.value_or(Boundary::Open), spec.j);
    return critical_gap(base);
}

struct Prepared {
    Model model;
    double gap = 0.0;
    double t_max = 0.0;
    StateVector ground;
};

Prepared prepare(const ModelSpec& spec, const ExperimentConfig& c, const DisorderConfig& d) {
    Prepared p;
    p.model = build_model(spec, BuildOptions{c.max_dimension});
    p.gap = gap_for(spec);
    p.t_max = d.t_max ? *d.t_max : d.gap_factor / p.gap;
    p.ground = ground_state(p.model, c.initial_gamma).state;
    return p;
}

QuenchSpec quench_spec(const DisorderConfig& d, double t_max, std::uint64_t offset,
                       std::uint64_t tag) {
    QuenchSpec q;
    q.gamma1 = d.gamma1;
    q.gamma2 = d.gamma2;
    q.t_max = t_max;
    q.n_cycles = d.n_cycles;
    q.seed = derive_seed(d.seed + offset, {tag});
    return q;
}

std::size_t auto_stride(std::size_t requested, std::size_t steps) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, steps / 2000);
}

json provenance(const ExperimentConfig& c, const RunOptions& o, const std::string& command) {
    return json{{"tool", tool_version_line()},
                {"config_hash", config_hash(c.source)},
                {"command", command},
                {"seed_offset", o.seed_offset}};
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int transition_tag(const std::string& t) { return t == "ms" ? 1 : 2; }

}  // namespace

std::pair<double, bool> plateau_estimate(const std::vector<double>& e) {
    if (e.empty()) return {0.0, false};
    const std::size_t n = e.size();
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * n)));
    double mean = 0.0;
    for (std::size_t i = n - w; i < n; ++i) mean += e[i];
    mean /= static_cast<double>(w);
    if (w < 2) return {mean, false};
    const std::size_t half = w / 2;
    double a = 0.0, b = 0.0;
    for (std::size_t i = n - w; i < n - w + half; ++i) a += e[i];
    for (std::size_t i = n - w + half; i < n; ++i) b += e[i];
    a /= static_cast<double>(half);
    b /= static_cast<double>(w - half);
    const bool reached = mean <= 0.0 || std::abs(b - a) < 0.02 * mean;
    return {mean, reached};
}

Disordering run_disordering(Propagator& prop, const StateVector& initial, const QuenchSpec& spec,
                            double dt, std::size_t stride) {
    Disordering d;
    d.pulse = random_quench_pulse(spec, dt);
    if (stride == 0) throw ValidationError("disordering: stride must be >= 1");
    const Pulse& p = d.pulse;
    StateVector psi = initial;
    TrajectoryRecord& rec = d.trajectory;
    auto sample = [&](std::size_t k, double g) {
        rec.time.push_back(p.dt * static_cast<double>(k));
        rec.entropy.push_back(diagonal_entropy(psi, prop.spectrum(g)));
        rec.infidelity.push_back(infidelity(psi, initial));
    };
    sample(0, p.gamma.front());
    for (const PulseRun& run : pulse_runs(p)) {
        std::size_t k = run.start;
        const std::size_t end = run.start + run.length;
        while (k < end) {
            const std::size_t next_sample = (k / stride + 1) * stride;
            const std::size_t stop = std::min(end, next_sample);
            prop.evolve(psi, run.gamma, stop - k, p.dt, p.sign);
            k = stop;
            if (k % stride == 0 || k == p.steps()) sample(k, run.gamma);
        }
        d.segment_entropy.push_back(diagonal_entropy(psi, prop.spectrum(run.gamma)));
        d.segment_gamma.push_back(run.gamma);
        d.segment_states.push_back(psi);
    }
    std::tie(d.plateau, d.plateau_reached) = plateau_estimate(d.segment_entropy);
    d.final_state = psi;
    return d;
}

std::size_t max_entropy_segment(const Disordering& d) {
    if (d.segment_entropy.empty()) throw ValidationError("disordering: no segments");
    for (std::size_t i = d.segment_entropy.size(); i-- > 0;)
        if (std::abs(d.segment_entropy[i] - d.plateau) <= 0.1 * d.plateau) return i;
    return d.segment_entropy.size() - 1;
}

StateVector center_eigenstate(const HamiltonianPair& pair, double gamma) {
    const Spectrum s = diagonalize(pair, gamma);
    const auto n = s.energies.size();
    const double mid = 0.5 * (s.energies[0] + s.energies[n - 1]);
    Eigen::Index best = 0;
    double dist = std::abs(s.energies[0] - mid);
    for (Eigen::Index i = 1; i < n; ++i) {
        const double di = std::abs(s.energies[i] - mid);
        if (di < dist) {
            dist = di;
            best = i;
        }
    }
    StateVector v = s.vectors.col(best).cast<std::complex<double>>();
    fix_phase(v);
    return v;
}

Threshold crossing_threshold(const std::vector<double>& xi, const std::vector<double>& med,
                             double level) {
    Threshold t;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (med[i] < level) continue;
        if (i == 0) {
            t.xi = xi.front();
            t.kind = "below_grid";
            return t;
        }
        const double x0 = xi[i - 1], x1 = xi[i];
        const double y0 = std::max(med[i - 1], 1e-300), y1 = std::max(med[i], 1e-300);
        if (x0 > 0.0 && y1 > y0) {
            const double s = (std::log(level) - std::log(y0)) / (std::log(y1) - std::log(y0));
            t.xi = std::exp(std::log(x0) + s * (std::log(x1) - std::log(x0)));
        } else {
            t.xi = x1;
        }
        t.kind = "interpolated";
        return t;
    }
    t.xi = xi.empty() ? std::optional<double>{} : std::optional<double>{xi.back()};
    t.kind = "above_grid";
    return t;
}

// ================================================================ quench

QuenchResult run_quench(const ExperimentConfig& c, const RunOptions& o) {
    check_dimension(c.model, c.max_dimension, "quench");
    const int seeds = c.sweep.seeds;
    QuenchResult result;
    const Prepared prep = prepare(c.model, c, c.disorder);
    result.gap = prep.gap;
    result.t_max = prep.t_max;
    result.ln_dimension = std::log(static_cast<double>(prep.model.basis.dimension()));
    const double dt = c.step();

    result.seeds.resize(static_cast<std::size_t>(seeds));
    parallel_for(static_cast<std::size_t>(seeds), o.workers, [&](std::size_t s) {
        QuenchSeedResult& r = result.seeds[s];
        r.seed_index = static_cast<int>(s);
        Propagator prop(prep.model.pair);
        if (c.disorder.n_cycles == 0) {
            r.trajectory.time = {0.0};
            r.trajectory.entropy = {diagonal_entropy(prep.ground, prop.spectrum(c.initial_gamma))};
            r.trajectory.infidelity = {0.0};
            r.plateau = r.trajectory.entropy.front();
            r.plateau_reached = true;
            return;
        }
        const QuenchSpec q = quench_spec(c.disorder, prep.t_max, o.seed_offset, s);
        const std::size_t steps = random_quench_pulse(q, dt).steps();
        Disordering d = run_disordering(prop, prep.ground, q, dt, auto_stride(c.sample_stride, steps));
        r.plateau = d.plateau;
        r.plateau_reached = d.plateau_reached;
        r.trajectory = std::move(d.trajectory);
    });
    for (const auto& r : result.seeds) result.mean_plateau += r.plateau;
    result.mean_plateau /= static_cast<double>(seeds);
    result.ratio = result.ln_dimension > 0.0 ? result.mean_plateau / result.ln_dimension : 0.0;

    if (o.write_outputs) {
        const auto root = output_root(c, o);
        const std::string header = provenance_header(config_hash(c.source));
        json summary = provenance(c, o, "quench");
        summary["model"] = c.model;
        summary["critical_gap"] = result.gap;
        summary["t_max"] = result.t_max;
        summary["dt"] = dt;
        summary["ln_dimension"] = result.ln_dimension;
        summary["mean_plateau"] = result.mean_plateau;
        summary["plateau_over_ln_dimension"] = result.ratio;
        json per_seed = json::array();
        for (const auto& r : result.seeds) {
            std::ostringstream csv;
            csv << header;
            write_trajectory_csv(csv, r.trajectory);
            write_text_file(root / ("quench_trajectory_seed" + std::to_string(r.seed_index) + ".csv"),
                            csv.str());
            per_seed.push_back({{"seed_index", r.seed_index},
                                {"plateau", r.plateau},
                                {"plateau_reached", r.plateau_reached}});
        }
        summary["seeds"] = per_seed;
        write_text_file(root / "quench_summary.json", summary.dump(2) + "\n");
    }
    return result;
}

// ================================================================ reverse

ReverseResult run_reverse(const ExperimentConfig& c, const RunOptions& o) {
    check_dimension(c.model, c.max_dimension, "reverse");
    if (c.disorder.n_cycles < 1) throw ConfigError("/disorder/n_cycles: reverse needs >= 1");
    ReverseResult result;
    const Prepared prep = prepare(c.model, c, c.disorder);
    result.gap = prep.gap;
    result.t_max = prep.t_max;
    const double dt = c.step();
    const auto& pair = prep.model.pair;

    struct Method {
        std::string name;
        Pulse pulse;
        StateVector start;
    };
    std::vector<Method> methods;

    Propagator prop(pair);
    const QuenchSpec q = quench_spec(c.disorder, prep.t_max, o.seed_offset, 0);
    const Disordering d = run_disordering(prop, prep.ground, q, dt, random_quench_pulse(q, dt).steps());
    result.disorder_duration = d.pulse.duration();
    result.disorder_entropy = d.segment_entropy.back();
    methods.push_back({"reversed", time_reversed_pulse(d.pulse), d.final_state});

    if (c.disorder_short) {
        const double t_short = c.disorder_short->t_max ? *c.disorder_short->t_max
                                                       : c.disorder_short->gap_factor / prep.gap;
        const QuenchSpec qs = quench_spec(*c.disorder_short, t_short, o.seed_offset, 1);
        const Disordering ds = run_disordering(prop, prep.ground, qs, dt, random_quench_pulse(qs, dt).steps());
        methods.push_back({"reversed_short", time_reversed_pulse(ds.pulse), ds.final_state});
    }

    const int n_f = c.noise.n_f > 0 ? c.noise.n_f : c.control.n_f.back();
    const double start = c.control.guess_start ? *c.control.guess_start : d.pulse.gamma.back();
    const Pulse guess = linear_ramp(start, c.initial_gamma, c.control.total_time, dt);
    OptimizerConfig opt = c.control.optimizer;
    opt.seed += o.seed_offset;
    result.optimization = optimize(pair, d.final_state, prep.ground, guess, n_f, opt);
    result.converged = result.optimization.converged;
    const Pulse best = render_pulse(guess, result.optimization.basis, result.optimization.coefficients);
    {
        const StateVector fin = prop.propagate(best, d.final_state);
        result.optimized_entropy = diagonal_entropy(fin, prop.spectrum(best.gamma.back()));
    }
    methods.push_back({"optimized", best, d.final_state});

    const std::size_t nxi = c.noise.xi.size();
    const auto nseed = static_cast<std::size_t>(c.noise.seeds);
    std::vector<double> values(methods.size() * nxi * nseed);
    parallel_for(values.size(), o.workers, [&](std::size_t idx) {
        const std::size_t m = idx / (nxi * nseed);
        const std::size_t i = (idx / nseed) % nxi;
        const std::size_t s = idx % nseed;
        NoiseSpec ns;
        ns.xi = c.noise.xi[i];
        ns.correlation_step = c.noise.correlation_step;
        ns.seed = derive_seed(c.noise.seed + o.seed_offset, {m, i, s});
        Propagator local(pair);
        const Pulse noisy = add_noise(methods[m].pulse, ns);
        values[idx] = infidelity(local.propagate(noisy, methods[m].start), prep.ground);
    });

    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> med;
        for (std::size_t i = 0; i < nxi; ++i) {
            ReverseRow row;
            row.method = methods[m].name;
            row.xi = c.noise.xi[i];
            const auto first = values.begin() + static_cast<std::ptrdiff_t>((m * nxi + i) * nseed);
            row.infidelity.assign(first, first + static_cast<std::ptrdiff_t>(nseed));
            row.median = median(row.infidelity);
            med.push_back(row.median);
            result.rows.push_back(std::move(row));
        }
        result.thresholds[methods[m].name] = crossing_threshold(c.noise.xi, med, 0.1);
    }
    const Threshold& rev = result.thresholds["reversed"];
    const Threshold& optt = result.thresholds["optimized"];
    if (rev.xi && optt.xi && *rev.xi > 0.0) result.ratio = *optt.xi / *rev.xi;

    if (o.write_outputs) {
        const auto root = output_root(c, o);
        const std::string header = provenance_header(config_hash(c.source));
        std::ostringstream runs, table, pulse_csv;
        runs << header << "method,xi,seed,infidelity\n";
        table << header << "method,xi,median_infidelity\n";
        for (const auto& row : result.rows) {
            for (std::size_t s = 0; s < row.infidelity.size(); ++s)
                runs << row.method << ',' << format_double(row.xi) << ',' << s << ','
                     << format_double(row.infidelity[s]) << '\n';
            table << row.method << ',' << format_double(row.xi) << ',' << format_double(row.median)
                  << '\n';
        }
        pulse_csv << header;
        write_pulse_csv(pulse_csv, best);
        write_text_file(root / "reverse_runs.csv", runs.str());
        write_text_file(root / "reverse_table.csv", table.str());
        write_text_file(root / "optimized_pulse.csv", pulse_csv.str());

        json summary = provenance(c, o, "reverse");
        summary["model"] = c.model;
        summary["critical_gap"] = result.gap;
        summary["t_max"] = result.t_max;
        summary["dt"] = dt;
        summary["disorder_duration"] = result.disorder_duration;
        summary["disorder_final_entropy"] = result.disorder_entropy;
        summary["optimized_final_entropy"] = result.optimized_entropy;
        summary["optimization"] = result.optimization;
        json th = json::object();
        for (const auto& [name, t] : result.thresholds)
            th[name] = {{"xi_at_0.1", t.xi ? json(*t.xi) : json(nullptr)}, {"kind", t.kind}};
        summary["thresholds"] = th;
        summary["ratio_optimized_over_reversed"] = result.ratio ? json(*result.ratio) : json(nullptr);
        write_text_file(root / "reverse_summary.json", summary.dump(2) + "\n");
    }
    return result;
}

// ================================================================ freq-scan

namespace {

struct ScanUnit {
    std::size_t size_index;
    std::string transition;
    int seed_index;
};

FreqScanResult scan_sizes(const ExperimentConfig& c, const RunOptions& o,
                          const std::vector<ModelSpec>& specs,
                          const std::vector<std::string>& transitions) {
    FreqScanResult result;
    const double dt = c.step();
    struct Start {
        StateVector state;
        double guess_start;
    };
    std::vector<Prepared> preps(specs.size());
    std::vector<std::map<std::string, Start>> starts(specs.size());
    result.sizes.resize(specs.size());

    for (std::size_t i = 0; i < specs.size(); ++i) {
        preps[i] = prepare(specs[i], c, c.disorder);
        SizeScan& sz = result.sizes[i];
        sz.model = specs[i];
        sz.gap = preps[i].gap;
        sz.t_max = preps[i].t_max;
        const double default_start = c.control.guess_start ? *c.control.guess_start : c.disorder.gamma2;
        for (const auto& t : transitions) {
            if (t == "c") {
                starts[i][t] = {center_eigenstate(preps[i].model.pair, c.initial_gamma), default_start};
            } else {
                if (c.disorder.n_cycles < 1) throw ConfigError("/disorder/n_cycles: ms transition needs >= 1");
                Propagator prop(preps[i].model.pair);
                const QuenchSpec q = quench_spec(c.disorder, preps[i].t_max, o.seed_offset,
                                                 static_cast<std::uint64_t>(specs[i].n));
                const Disordering d =
                    run_disordering(prop, preps[i].ground, q, dt, random_quench_pulse(q, dt).steps());
                const std::size_t k = max_entropy_segment(d);
                sz.ms_entropy = d.segment_entropy[k];
                sz.plateau = d.plateau;
                starts[i][t] = {d.segment_states[k],
                                c.control.guess_start ? *c.control.guess_start : d.segment_gamma[k]};
            }
        }
    }

    std::vector<ScanUnit> units;
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (const auto& t : transitions)
            for (int s = 0; s < c.sweep.seeds; ++s) units.push_back({i, t, s});
    std::vector<TransitionRun> runs(units.size());

    parallel_for(units.size(), o.workers, [&](std::size_t u) {
        const ScanUnit& unit = units[u];
        const Prepared& prep = preps[unit.size_index];
        const Start& st = starts[unit.size_index].at(unit.transition);
        const Pulse guess = linear_ramp(st.guess_start, c.initial_gamma, c.control.total_time, dt);
        OptimizerConfig opt = c.control.optimizer;
        opt.seed = derive_seed(opt.seed + o.seed_offset,
                               {static_cast<std::uint64_t>(specs[unit.size_index].n),
                                static_cast<std::uint64_t>(transition_tag(unit.transition)),
                                static_cast<std::uint64_t>(unit.seed_index)});
        TransitionRun& run = runs[u];
        run.transition = unit.transition;
        run.seed_index = unit.seed_index;
        std::optional<WarmStart> warm;
        for (int n_f : c.control.n_f) {
            const OptimizationReport rep =
                optimize(prep.model.pair, st.state, prep.ground, guess, n_f, opt, warm);
            run.points.push_back({n_f, rep.best_infidelity, rep.evaluations, rep.converged});
            warm = WarmStart{rep.best_draw, rep.coefficients,
                             opt.optimize_frequencies ? rep.basis.r : std::vector<double>{}};
        }
    });

    const DecayFitOptions fit_opts{c.fit.eta, c.fit.max_infidelity, c.fit.min_infidelity};
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (const auto& p : runs[u].points)
            if (!p.converged) result.converged = false;
        result.sizes[units[u].size_index].runs.push_back(std::move(runs[u]));
    }
    for (auto& sz : result.sizes) {
        for (const auto& t : transitions) {
            DecayCurve curve;
            curve.n = sz.model.n;
            for (std::size_t k = 0; k < c.control.n_f.size(); ++k) {
                DecayPoint p{c.control.n_f[k], 1.0, 0};
                for (const auto& run : sz.runs)
                    if (run.transition == t) {
                        p.infidelity = std::min(p.infidelity, run.points[k].infidelity);
                        ++p.seeds;
                    }
                curve.points.push_back(p);
            }
            sz.curves[t] = curve;
            try {
                sz.fits[t] = fit_decay(curve, fit_opts);
            } catch (const FitError& e) {
                sz.fits[t] = std::nullopt;
                sz.fit_errors[t] = e.what();
            }
        }
    }
    const CollapseOptions copts{0.5, 2.5, 0.01, c.fit.max_infidelity, c.fit.min_infidelity};
    for (const auto& t : transitions) {
        std::vector<DecayCurve> curves;
        for (const auto& sz : result.sizes) curves.push_back(sz.curves.at(t));
        result.collapse[t] = collapse_alpha(curves, copts);
    }
    return result;
}

std::string decay_csv(const std::string& header, const SizeScan& sz) {
    std::ostringstream out;
    out << header << "n,transition,seed,n_f,infidelity,evaluations,converged\n";
    for (const auto& run : sz.runs)
        for (const auto& p : run.points)
            out << sz.model.n << ',' << run.transition << ',' << run.seed_index << ',' << p.n_f << ','
                << format_double(p.infidelity) << ',' << p.evaluations << ','
                << (p.converged ? 1 : 0) << '\n';
    return out.str();
}

json size_summary(const SizeScan& sz, double target) {
    json j{{"model", sz.model},
           {"critical_gap", sz.gap},
           {"t_max", sz.t_max},
           {"ms_entropy", sz.ms_entropy},
           {"plateau", sz.plateau}};
    json fits = json::object();
    for (const auto& [t, fit] : sz.fits) {
        json f = fit ? json(*fit) : json(nullptr);
        if (auto it = sz.fit_errors.find(t); it != sz.fit_errors.end()) f = {{"error", it->second}};
        const DecayCurve& curve = sz.curves.at(t);
        json solved = nullptr;
        for (const auto& p : curve.points)
            if (p.infidelity <= target) {
                solved = p.n_f;
                break;
            }
        fits[t] = {{"fit", f}, {"n_f_solved", solved}};
    }
    j["transitions"] = fits;
    return j;
}

}  // namespace

FreqScanResult run_freq_scan(const ExperimentConfig& c, const RunOptions& o) {
    std::vector<ModelSpec> specs;
    for (int n : c.sizes()) {
        specs.push_back(with_size(c.model, n));
        check_dimension(specs.back(), c.max_dimension, "freq-scan");
    }
    FreqScanResult result = scan_sizes(c, o, specs, c.sweep.transitions);

    if (o.write_outputs) {
        const auto root = output_root(c, o);
        const std::string header = provenance_header(config_hash(c.source));
        json summary = provenance(c, o, "freq-scan");
        json sizes = json::array();
        for (const auto& sz : result.sizes) {
            write_text_file(root / ("decay_N" + std::to_string(sz.model.n) + ".csv"), decay_csv(header, sz));
            sizes.push_back(size_summary(sz, c.control.target_infidelity));
        }
        summary["sizes"] = sizes;
        json col = json::object();
        for (const auto& [t, r] : result.collapse) col[t] = r;
        summary["collapse"] = col;
        write_text_file(root / "freq_scan_summary.json", summary.dump(2) + "\n");
    }
    return result;
}

// ================================================================ scaling

ScalingResult run_scaling(const ExperimentConfig& c, const RunOptions& o) {
    if (c.model.kind == ModelKind::LMG) throw ConfigError("/model/kind: scaling needs an Ising chain");
    if (c.sweep.jx.empty()) throw ConfigError("/sweep/jx: must not be empty");
    const Boundary boundary = c.model.boundary.value_or(Boundary::Open);
    std::vector<std::vector<ModelSpec>> all;
    for (double jx : c.sweep.jx) {
        std::vector<ModelSpec> specs;
        for (int n : c.sizes()) {
            ModelSpec s = jx == 0.0 ? ModelSpec::ising(n, boundary, c.model.j)
                                    : ModelSpec::ising_longitudinal(n, jx, boundary, c.model.j);
            try {
                s.validate();
            } catch (const ValidationError& e) {
                throw ConfigError(std::string("/sweep: ") + e.what());
            }
            check_dimension(s, c.max_dimension, "scaling");
            specs.push_back(s);
        }
        all.push_back(std::move(specs));
    }

    ScalingResult result;
    const std::vector<std::string> transitions{c.sweep.transitions.front()};
    const std::string& t = transitions.front();
    for (std::size_t k = 0; k < all.size(); ++k) {
        ScalingSeries series;
        series.jx = c.sweep.jx[k];
        series.scan = scan_sizes(c, o, all[k], transitions);
        if (!series.scan.converged) result.converged = false;
        for (const auto& sz : series.scan.sizes)
            if (const auto& fit = sz.fits.at(t)) series.points.push_back({static_cast<double>(sz.model.n), fit->b});
        try {
            series.fit = fit_scaling(series.points);
            if (!series.fit->preferred) series.message = "preference withheld (degenerate or tied)";
        } catch (const FitError& e) {
            series.message = std::string(e.what()) + "; preference withheld";
        }
        result.series.push_back(std::move(series));
    }

    if (o.write_outputs) {
        const auto root = output_root(c, o);
        const std::string header = provenance_header(config_hash(c.source));
        json report = provenance(c, o, "scaling");
        json series = json::array();
        std::ostringstream points;
        points << header << "jx,n,B,eta\n";
        for (const auto& s : result.series) {
            json js{{"jx", s.jx}, {"message", s.message}};
            js["fit"] = s.fit ? json(*s.fit) : json(nullptr);
            json sizes = json::array();
            for (const auto& sz : s.scan.sizes) {
                sizes.push_back(size_summary(sz, c.control.target_infidelity));
                write_text_file(root / ("decay_jx" + format_double(s.jx) + "_N" +
                                        std::to_string(sz.model.n) + ".csv"),
                                decay_csv(header, sz));
                if (const auto& fit = sz.fits.at(t))
                    points << format_double(s.jx) << ',' << sz.model.n << ',' << format_double(fit->b)
                           << ',' << format_double(fit->eta) << '\n';
            }
            js["sizes"] = sizes;
            series.push_back(js);
        }
        report["series"] = series;
        write_text_file(root / "scaling_report.json", report.dump(2) + "\n");
        write_text_file(root / "scaling_points.csv", points.str());
    }
    return result;
}

// ================================================================ fit

FitResult run_fit(const ExperimentConfig& c, const RunOptions& o) {
    if (c.fit.inputs.empty()) throw ConfigError("/fit/inputs: must list at least one decay table");
    // n -> n_f -> (best infidelity, seeds)
    std::map<int, std::map<int, std::pair<double, int>>> grouped;
    for (const auto& path : c.fit.inputs) {
        CsvTable table;
        try {
            table = parse_csv(read_text_file(path));
        } catch (const ValidationError& e) {
            throw ConfigError("/fit/inputs: " + path + ": " + e.what());
        }
        std::size_t cn, ct, cnf, ci;
        try {
            cn = table.column("n");
            ct = table.column("transition");
            cnf = table.column("n_f");
            ci = table.column("infidelity");
        } catch (const ValidationError& e) {
            throw ConfigError("/fit/inputs: " + path + ": " + e.what());
        }
        for (const auto& row : table.rows) {
            if (row[ct] != c.fit.transition) continue;
            int n = 0, nf = 0;
            double inf = 0.0;
            try {
                n = std::stoi(row[cn]);
                nf = std::stoi(row[cnf]);
                inf = std::stod(row[ci]);
            } catch (const std::exception&) {
                throw ConfigError("/fit/inputs: " + path + ": malformed row");
            }
            auto [it, fresh] = grouped[n].try_emplace(nf, inf, 0);
            it->second.first = std::min(it->second.first, inf);
            ++it->second.second;
            (void)fresh;
        }
    }
    FitResult result;
    const DecayFitOptions fit_opts{c.fit.eta, c.fit.max_infidelity, c.fit.min_infidelity};
    std::vector<ScalingPoint> points;
    for (const auto& [n, by_nf] : grouped) {
        DecayCurve curve;
        curve.n = n;
        for (const auto& [nf, v] : by_nf) curve.points.push_back({nf, v.first, v.second});
        result.curves.push_back(curve);
        try {
            const DecayFit f = fit_decay(curve, fit_opts);
            result.fits.emplace_back(n, f);
            points.push_back({static_cast<double>(n), f.b});
        } catch (const FitError& e) {
            result.fits.emplace_back(n, std::nullopt);
            result.messages.push_back(e.what());
        }
    }
    try {
        result.scaling = fit_scaling(points);
    } catch (const FitError& e) {
        result.messages.push_back(std::string(e.what()) + "; preference withheld");
    }
    result.collapse = collapse_alpha(result.curves,
                                     CollapseOptions{0.5, 2.5, 0.01, c.fit.max_infidelity, c.fit.min_infidelity});

    if (o.write_outputs) {
        const auto root = output_root(c, o);
        const std::string header = provenance_header(config_hash(c.source));
        json report = provenance(c, o, "fit");
        json fits = json::array();
        std::ostringstream csv;
        csv << header << "n,B,eta\n";
        for (const auto& [n, f] : result.fits) {
            fits.push_back({{"n", n}, {"fit", f ? json(*f) : json(nullptr)}});
            if (f) csv << n << ',' << format_double(f->b) << ',' << format_double(f->eta) << '\n';
        }
        report["fits"] = fits;
        report["scaling"] = result.scaling ? json(*result.scaling) : json(nullptr);
        report["collapse"] = result.collapse;
        report["messages"] = result.messages;
        write_text_file(root / "fit_report.json", report.dump(2) + "\n");
        write_text_file(root / "fit_points.csv", csv.str());
    }
    return result;
}

}  // namespace revctl
