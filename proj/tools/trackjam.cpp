#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trackjam/config.hpp"
#include "trackjam/experiment.hpp"
#include "trackjam/sim.hpp"
#include "trackjam/trace_csv.hpp"
#include "trackjam/version.hpp"

namespace fs = std::filesystem;
using namespace trackjam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out_dir;
};

void print_metrics(const TrialMetrics& m) {
    std::cout << "  incidents_per_agent  " << format_double(m.incidents_per_agent) << '\n'
              << "  target_received_W    " << format_double(m.target_received_w) << '\n'
              << "  agent_interference_W " << format_double(m.agent_interference_w) << '\n'
              << "  transmit_W           " << format_double(m.transmit_w) << '\n'
              << "  ospa_m               " << format_double(m.ospa_m) << '\n';
}

int cmd_run(const Options& opt) {
    ScenarioConfig cfg = load_scenario(opt.config);
    if (opt.seed) {
        cfg.master_seed = *opt.seed;
    }
    if (opt.trials && *opt.trials != 1) {
        throw ValidationError({"--trials is not meaningful for 'run'; use 'experiment'"});
    }
    const fs::path out_dir = opt.out_dir.value_or(".");
    fs::create_directories(out_dir);
    const Trace trace = run_scenario(cfg);
    const fs::path path = out_dir / "trace.csv";
    write_trace_csv(trace, path);
    std::cout << "seed " << cfg.master_seed << ", " << trace.steps.size() << " steps -> "
              << path.string() << '\n';
    print_metrics(trial_metrics(trace, cfg.incident_threshold_w()));
    return kExitOk;
}

int cmd_experiment(const Options& opt) {
    ExperimentSpec spec = load_experiment(opt.config);
    if (opt.seed) {
        const std::uint64_t seed = *opt.seed;
        spec.base.master_seed = seed;
        for (NamedConfig& nc : spec.configurations) {
            nc.config.master_seed = seed;
        }
    }
    if (opt.trials) {
        spec.n_trials = *opt.trials;
    }
    const fs::path out_dir = opt.out_dir ? fs::path(*opt.out_dir)
                                         : spec.output_dir.value_or(fs::path("out"));
    std::cout << to_string(spec.kind) << " experiment, " << spec.n_trials
              << " trial(s) per configuration -> " << out_dir.string() << '\n';
    const ExperimentResult result = run_experiment(spec, out_dir, [](const TrialResult& t) {
        std::cout << "  " << t.configuration << " trial " << t.trial << " (seed " << t.seed
                  << ") incidents/agent " << format_double(t.metrics.incidents_per_agent)
                  << '\n';
    });
    std::cout << "summary -> " << result.summary_path.string() << '\n';
    for (const SummaryRecord& r : result.summary) {
        std::cout << "  " << r.configuration << ' ' << r.metric << ' ' << format_double(r.value)
                  << '\n';
    }
    return kExitOk;
}

int cmd_oracle_check(const Options& opt) {
    const ScenarioConfig cfg = load_scenario(opt.config);
    ToyProblemParams toy;
    toy.n_agents = cfg.n_agents;
    toy.levels = cfg.power_levels;
    toy.tolerance_w = cfg.tolerance_w();
    toy.sensing = cfg.effective_sensing();
    const std::size_t instances = opt.trials.value_or(100);
    const std::uint64_t seed = opt.seed.value_or(cfg.master_seed);
    const OracleCheckResult r = run_oracle_check(toy, instances, cfg.solver.n_samples,
                                                 cfg.solver.n_iterations, seed);
    std::cout << "instances  " << r.instances << '\n'
              << "optimal    " << r.optimal << '\n'
              << "infeasible " << r.infeasible << '\n'
              << "max_gap    " << format_double(r.max_gap) << '\n';
    return r.infeasible == 0 ? kExitOk : kExitRuntime;
}

void print_validation(const ValidationError& e) {
    std::cerr << "error: invalid configuration\n";
    for (const std::string& p : e.problems()) {
        std::cerr << "  - " << p << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent target tracking and jamming simulator"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&opt](CLI::App* sub, bool with_out_dir) {
        sub->add_option("config", opt.config, "TOML configuration file")->required();
        sub->add_option("--seed", opt.seed, "Override the master seed");
        sub->add_option("--trials", opt.trials, "Number of trials (or oracle instances)")
            ->check(CLI::PositiveNumber);
        if (with_out_dir) {
            sub->add_option("--out-dir", opt.out_dir, "Output directory");
        }
    };

    CLI::App* run = app.add_subcommand("run", "Run one scenario and write trace.csv");
    add_common(run, true);
    CLI::App* experiment =
        app.add_subcommand("experiment", "Run a sweep or ablation and write a summary");
    add_common(experiment, true);
    CLI::App* oracle =
        app.add_subcommand("oracle-check", "Compare GRASP against the exhaustive oracle");
    add_common(oracle, false);
    CLI::App* version_cmd = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (version_cmd->parsed()) {
            std::cout << "trackjam " << trackjam::version() << '\n';
            return kExitOk;
        }
        if (run->parsed()) {
            return cmd_run(opt);
        }
        if (experiment->parsed()) {
            return cmd_experiment(opt);
        }
        return cmd_oracle_check(opt);
    } catch (const ConfigParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ValidationError& e) {
        print_validation(e);
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
