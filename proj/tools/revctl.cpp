// revctl: command-line front end for the disordering / reversal experiments.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 completed
// but at least one optimization stopped short of its convergence criterion.

#include <CLI11.hpp>

#include <iostream>

#include "revctl/experiments.hpp"
#include "revctl/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNotConverged = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reversal of quantum disordering: quench, reverse, freq-scan, scaling, fit"};
    app.set_version_flag("--version", revctl::tool_version_line());
    app.require_subcommand(1, 1);

    std::string config_path;
    int workers = 1;
    std::string out_dir;
    std::uint64_t seed_offset = 0;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"quench", "random-quench disordering, S_d(t) and plateau"},
        {"reverse", "exact vs optimized reversal under pulse noise"},
        {"freq-scan", "best infidelity versus n_f for each N"},
        {"scaling", "B(N) for Jx = 0 and Jx != 0 with linear/exponential fits"},
        {"fit", "fit decay tables written by freq-scan"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed-offset", seed_offset, "added to every base seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const revctl::ExperimentConfig config = revctl::load_config(config_path);
        revctl::RunOptions options;
        options.workers = workers;
        options.seed_offset = seed_offset;
        options.output_dir = out_dir;

        bool converged = true;
        if (command == "quench") {
            const auto r = revctl::run_quench(config, options);
            std::cout << "plateau " << r.mean_plateau << " (" << r.ratio << " of ln dim)\n";
        } else if (command == "reverse") {
            const auto r = revctl::run_reverse(config, options);
            converged = r.converged;
            for (const auto& [method, t] : r.thresholds)
                std::cout << method << " xi*(I=0.1) " << (t.xi ? std::to_string(*t.xi) : "n/a") << " ["
                          << t.kind << "]\n";
        } else if (command == "freq-scan") {
            converged = revctl::run_freq_scan(config, options).converged;
        } else if (command == "scaling") {
            const auto r = revctl::run_scaling(config, options);
            converged = r.converged;
            for (const auto& s : r.series) {
                std::cout << "jx " << s.jx << ": ";
                if (s.fit && s.fit->preferred)
                    std::cout << revctl::to_string(*s.fit->preferred) << " preferred\n";
                else
                    std::cout << s.message << '\n';
            }
        } else {
            const auto r = revctl::run_fit(config, options);
            for (const auto& m : r.messages) std::cerr << "note: " << m << '\n';
        }
        if (!converged) {
            std::cerr << "revctl: completed, but some optimizations did not converge\n";
            return kNotConverged;
        }
        return kOk;
    } catch (const revctl::ValidationError& e) {
        std::cerr << "revctl: invalid configuration: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "revctl: error: " << e.what() << '\n';
        return 1;
    }
}
