#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "trackjam/experiment.hpp"
#include "trackjam/metrics.hpp"
#include "trackjam/trace_csv.hpp"

using namespace trackjam;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("trackjam_test_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

ScenarioConfig quick_base() {
    ScenarioConfig cfg;
    cfg.n_steps = 6;
    cfg.solver.n_samples = 200;
    cfg.solver.n_iterations = 2;
    cfg.filter.n_particles = 500;
    cfg.filter.n_birth_particles = 100;
    cfg.master_seed = 11;
    return cfg;
}

/// Mean of finite values, NaN when none.
double finite_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        if (!std::isnan(x)) {
            sum += x;
            ++n;
        }
    }
    return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

}  // namespace

TEST(TrialFileName, ZeroPadded) {
    EXPECT_EQ(trial_file_name("enabled", 0), "enabled_trial000.csv");
    EXPECT_EQ(trial_file_name("cone60_u11", 17), "cone60_u11_trial017.csv");
}

TEST(SpawnTrial, InsideBoxAndSphere) {
    ScenarioConfig base = quick_base();
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const ScenarioConfig cfg = spawn_trial(base, seed, 20.0);
        EXPECT_EQ(cfg.master_seed, seed);
        const Vec3 target = cfg.target_initial.position;
        EXPECT_TRUE(cfg.surveillance_box.contains(target));
        ASSERT_EQ(cfg.agent_initial_positions.size(), cfg.n_agents);
        for (const Vec3& p : cfg.agent_initial_positions) {
            EXPECT_TRUE(cfg.surveillance_box.contains(p));
            EXPECT_LE((p - target).norm(), 20.0 + 1e-9);
            EXPECT_GT((p - target).norm(), 0.0);
        }
        EXPECT_EQ(cfg.aim_point(), target);
        EXPECT_TRUE(cfg.validate().empty());
    }
}

TEST(SpawnTrial, DependsOnlyOnSeed) {
    ScenarioConfig a = quick_base();
    ScenarioConfig b = quick_base();
    b.solver.enforce_interference = false;
    const ScenarioConfig sa = spawn_trial(a, 5, 20.0);
    const ScenarioConfig sb = spawn_trial(b, 5, 20.0);
    EXPECT_EQ(sa.agent_initial_positions, sb.agent_initial_positions);
    EXPECT_EQ(sa.target_initial.position, sb.target_initial.position);
    EXPECT_EQ(sa.target_initial.velocity, sb.target_initial.velocity);
    EXPECT_NE(spawn_trial(a, 6, 20.0).target_initial.position, sa.target_initial.position);
}

TEST(RunExperiment, SingleRunOneTrialWritesOneTrace) {
    TempDir dir;
    ExperimentSpec spec;
    spec.base = quick_base();
    const ExperimentResult r = run_experiment(spec, dir.path());
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].seed, spec.base.master_seed);
    std::size_t traces = 0;
    for (const auto& entry : fs::directory_iterator(dir.path())) {
        traces += entry.path().filename() != "summary.csv" ? 1 : 0;
    }
    EXPECT_EQ(traces, 1u);
    EXPECT_TRUE(fs::exists(dir.path() / "summary.csv"));
    const Trace t = read_trace_csv(r.trials[0].trace_path);
    EXPECT_EQ(t.steps.size(), 6u);
}

TEST(RunExperiment, AblationPairsShareSeedsAndSummaryMatchesTraces) {
    TempDir dir;
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Ablation;
    spec.n_trials = 3;
    spec.base = quick_base();
    std::vector<std::string> seen;
    const ExperimentResult r = run_experiment(spec, dir.path() / "nested",
                                              [&](const TrialResult& t) {
                                                  seen.push_back(t.configuration);
                                              });
    ASSERT_EQ(r.trials.size(), 6u);
    EXPECT_EQ(seen.size(), 6u);

    std::map<std::string, std::vector<std::uint64_t>> seeds;
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    for (const TrialResult& t : r.trials) {
        seeds[t.configuration].push_back(t.seed);
        const Trace trace = read_trace_csv(t.trace_path);
        const double thr = spec.base.incident_threshold_w();
        auto& v = values[t.configuration];
        v["incidents_per_agent"].push_back(
            static_cast<double>(jamming_incidents(trace, thr).total()) / 3.0);
        const PowerSummary p = power_summary(trace);
        v["target_received_W"].push_back(p.target_received_w);
        v["agent_interference_W"].push_back(p.agent_interference_w);
        v["transmit_W"].push_back(p.transmit_w);
        v["ospa_m"].push_back(mean_tracked_ospa(trace));
    }
    EXPECT_EQ(seeds["enabled"], seeds["disabled"]);
    EXPECT_EQ(seeds["enabled"], (std::vector<std::uint64_t>{11, 12, 13}));

    const std::vector<SummaryRecord> summary = read_summary_csv(r.summary_path);
    EXPECT_EQ(summary.size(), r.summary.size());
    std::size_t checked = 0;
    for (const SummaryRecord& rec : summary) {
        const double expected = finite_mean(values.at(rec.configuration).at(rec.metric));
        if (std::isnan(expected)) {
            EXPECT_TRUE(std::isnan(rec.value));
            EXPECT_EQ(rec.trials, 0u);
        } else {
            EXPECT_NEAR(rec.value, expected, 1e-12) << rec.configuration << " " << rec.metric;
        }
        EXPECT_EQ(rec.first_seed, 11u);
        ++checked;
    }
    EXPECT_EQ(checked, 10u);
}

TEST(RunExperiment, SweepUsesNamedFiles) {
    TempDir dir;
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Sweep;
    spec.base = quick_base();
    spec.base.n_steps = 3;
    ScenarioConfig narrow = spec.base;
    narrow.sensing.cone_angle = 1.0;
    spec.configurations = {{"wide", spec.base}, {"narrow", narrow}};
    const ExperimentResult r = run_experiment(spec, dir.path());
    ASSERT_EQ(r.trials.size(), 2u);
    EXPECT_TRUE(fs::exists(dir.path() / "wide_trial000.csv"));
    EXPECT_TRUE(fs::exists(dir.path() / "narrow_trial000.csv"));
}

TEST(RunExperiment, InvalidSpecThrows) {
    TempDir dir;
    ExperimentSpec spec;
    spec.base = quick_base();
    spec.n_trials = 0;
    EXPECT_THROW(run_experiment(spec, dir.path()), ValidationError);
}

TEST(SummaryCsv, RoundTrip) {
    TempDir dir;
    const std::vector<SummaryRecord> recs{{"a", "ospa_m", 1.0 / 3.0, 4, 100},
                                          {"b", "ospa_m", std::nan(""), 0, 100}};
    write_summary_csv(recs, dir.path() / "s.csv");
    const auto back = read_summary_csv(dir.path() / "s.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].value, 1.0 / 3.0);
    EXPECT_EQ(back[0].trials, 4u);
    EXPECT_TRUE(std::isnan(back[1].value));
}

TEST(OracleCheck, SmallRunIsOptimal) {
    ToyProblemParams toy;
    const OracleCheckResult r = run_oracle_check(toy, 5, 2000, 20, 3);
    EXPECT_EQ(r.instances, 5u);
    EXPECT_EQ(r.infeasible, 0u);
    EXPECT_GE(r.optimal, 4u);
    EXPECT_GE(r.max_gap, 0.0);
}
