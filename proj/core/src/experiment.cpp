#include "trackjam/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "trackjam/metrics.hpp"
#include "trackjam/sim.hpp"
#include "trackjam/trace_csv.hpp"

namespace trackjam {

TrialMetrics trial_metrics(const Trace& trace, double incident_threshold_w) {
    TrialMetrics m;
    const JammingReport jam = jamming_incidents(trace, incident_threshold_w);
    const std::size_t n = trace.n_agents();
    m.incidents_per_agent = n == 0 ? 0.0 : static_cast<double>(jam.total()) / static_cast<double>(n);
    const PowerSummary power = power_summary(trace);
    m.target_received_w = power.target_received_w;
    m.agent_interference_w = power.agent_interference_w;
    m.transmit_w = power.transmit_w;
    m.ospa_m = mean_tracked_ospa(trace);
    return m;
}

ScenarioConfig spawn_trial(const ScenarioConfig& base, std::uint64_t seed, double radius) {
    ScenarioConfig cfg = base;
    cfg.master_seed = seed;
    Rng rng = Rng::keyed(seed, static_cast<std::uint64_t>(StreamDomain::Spawn), 0);
    const Box& box = cfg.surveillance_box;
    const Vec3 target = box.sample(rng);
    const Vec3 velocity(rng.normal(), rng.normal(), rng.normal());
    cfg.target_initial = {target, velocity};
    cfg.initial_aim_point = target;
    cfg.agent_initial_positions.clear();
    constexpr int kMaxAttempts = 100'000;
    for (std::size_t j = 0; j < cfg.n_agents; ++j) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Vec3 dir(rng.normal(), rng.normal(), rng.normal());
            const double norm = dir.norm();
            if (norm == 0.0) {
                continue;
            }
            const double r = radius * std::cbrt(rng.uniform());
            const Vec3 p = target + (r / norm) * dir;
            if (box.contains(p) && (p - target).norm() > 1e-6) {
                cfg.agent_initial_positions.push_back(p);
                placed = true;
            }
        }
        if (!placed) {
            throw std::runtime_error("spawn_trial: could not place agent inside the box");
        }
    }
    return cfg;
}

std::vector<SummaryRecord> summarize(const std::vector<TrialResult>& trials) {
    struct Acc {
        double sum = 0.0;
        std::size_t count = 0;
    };
    struct ConfigAcc {
        std::uint64_t first_seed = 0;
        Acc incidents, target, interference, transmit, ospa;
    };
    std::vector<std::string> order;
    std::map<std::string, ConfigAcc> acc;
    auto add = [](Acc& a, double v) {
        if (!std::isnan(v)) {
            a.sum += v;
            ++a.count;
        }
    };
    for (const TrialResult& t : trials) {
        auto [it, inserted] = acc.try_emplace(t.configuration);
        if (inserted) {
            order.push_back(t.configuration);
            it->second.first_seed = t.seed;
        }
        ConfigAcc& c = it->second;
        add(c.incidents, t.metrics.incidents_per_agent);
        add(c.target, t.metrics.target_received_w);
        add(c.interference, t.metrics.agent_interference_w);
        add(c.transmit, t.metrics.transmit_w);
        add(c.ospa, t.metrics.ospa_m);
    }
    std::vector<SummaryRecord> out;
    for (const std::string& name : order) {
        const ConfigAcc& c = acc.at(name);
        auto emit = [&](const char* metric, const Acc& a) {
            const double mean = a.count == 0 ? std::numeric_limits<double>::quiet_NaN()
                                             : a.sum / static_cast<double>(a.count);
            out.push_back({name, metric, mean, a.count, c.first_seed});
        };
        emit("incidents_per_agent", c.incidents);
        emit("target_received_W", c.target);
        emit("agent_interference_W", c.interference);
        emit("transmit_W", c.transmit);
        emit("ospa_m", c.ospa);
    }
    return out;
}

void write_summary_csv(const std::vector<SummaryRecord>& records, std::ostream& out) {
    out << "configuration,metric,value,trials,first_seed\n";
    for (const SummaryRecord& r : records) {
        out << r.configuration << ',' << r.metric << ',' << format_double(r.value) << ','
            << r.trials << ',' << r.first_seed << '\n';
    }
}

void write_summary_csv(const std::vector<SummaryRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CsvError("cannot open for writing: " + path.string());
    }
    write_summary_csv(records, out);
    out.flush();
    if (!out) {
        throw CsvError("write failed: " + path.string());
    }
}

std::vector<SummaryRecord> read_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CsvError("cannot open for reading: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "configuration,metric,value,trials,first_seed") {
        throw CsvError(path.string() + ": unrecognised summary header");
    }
    std::vector<SummaryRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        SummaryRecord r;
        std::string value, trials, seed;
        std::getline(ss, r.configuration, ',');
        std::getline(ss, r.metric, ',');
        std::getline(ss, value, ',');
        std::getline(ss, trials, ',');
        std::getline(ss, seed, ',');
        auto v = parse_double(value);
        if (!v || trials.empty() || seed.empty()) {
            throw CsvError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
        }
        r.value = *v;
        r.trials = std::stoull(trials);
        r.first_seed = std::stoull(seed);
        out.push_back(std::move(r));
    }
    return out;
}

std::string trial_file_name(const std::string& configuration, std::size_t trial) {
    std::ostringstream os;
    os << configuration << "_trial" << std::setw(3) << std::setfill('0') << trial << ".csv";
    return os.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const TrialCallback& on_trial) {
    if (auto problems = spec.validate(); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " +
                                 ec.message());
    }

    ExperimentResult result;
    const bool spawn = spec.kind != ExperimentKind::Single;
    for (const NamedConfig& nc : spec.expanded_configurations()) {
        for (std::size_t k = 0; k < spec.n_trials; ++k) {
            const std::uint64_t seed = spec.base.master_seed + k;
            ScenarioConfig cfg = spawn ? spawn_trial(nc.config, seed, spec.spawn_radius) : nc.config;
            cfg.master_seed = seed;
            const Trace trace = run_scenario(cfg);

            TrialResult tr;
            tr.configuration = nc.name;
            tr.trial = k;
            tr.seed = seed;
            tr.trace_path = out_dir / trial_file_name(nc.name, k);
            write_trace_csv(trace, tr.trace_path);
            tr.metrics = trial_metrics(trace, cfg.incident_threshold_w());
            if (on_trial) {
                on_trial(tr);
            }
            result.trials.push_back(std::move(tr));
        }
    }
    result.summary = summarize(result.trials);
    result.summary_path = out_dir / "summary.csv";
    write_summary_csv(result.summary, result.summary_path);
    return result;
}

OracleCheckResult run_oracle_check(const ToyProblemParams& toy, std::size_t n_instances,
                                   std::size_t n_samples, std::size_t n_iterations,
                                   std::uint64_t seed) {
    OracleCheckResult out;
    for (std::size_t k = 0; k < n_instances; ++k) {
        Rng instance_rng =
            Rng::keyed(seed, static_cast<std::uint64_t>(StreamDomain::Instance), k);
        const ControlProblem prob = random_toy_problem(toy, instance_rng);
        Rng solver_rng = Rng::keyed(seed, static_cast<std::uint64_t>(StreamDomain::Solver), k);
        const JointControl grasp = grasp_solve(prob, n_samples, n_iterations, solver_rng);
        const JointControl best = exhaustive_oracle(prob);
        const JointEvaluation g = evaluate_joint(grasp, prob);
        const JointEvaluation o = evaluate_joint(best, prob);
        ++out.instances;
        if (!g.feasible) {
            ++out.infeasible;
        }
        if (g.feasible && g.objective == o.objective) {
            ++out.optimal;
        }
        out.max_gap = std::max(out.max_gap, o.objective - g.objective);
    }
    return out;
}

}  // namespace trackjam
