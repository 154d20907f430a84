#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "trackjam/config.hpp"
#include "trackjam/control.hpp"
#include "trackjam/trace.hpp"

namespace trackjam {

/// Per-trial quantities averaged into the summary.
struct TrialMetrics {
    double incidents_per_agent = 0.0;
    double target_received_w = 0.0;
    double agent_interference_w = 0.0;
    double transmit_w = 0.0;
    double ospa_m = 0.0;  ///< NaN when the target was never tracked
};

TrialMetrics trial_metrics(const Trace& trace, double incident_threshold_w);

/// Target uniform in the box with N(0, 1) velocity, agents uniform in a ball of
/// `radius` around it (rejected outside the box), antennas and belief cued at
/// the target. Keyed by `seed`, so paired runs share the geometry.
ScenarioConfig spawn_trial(const ScenarioConfig& base, std::uint64_t seed, double radius);

struct TrialResult {
    std::string configuration;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::filesystem::path trace_path;
    TrialMetrics metrics;
};

struct SummaryRecord {
    std::string configuration;
    std::string metric;
    double value = 0.0;
    std::size_t trials = 0;  ///< trials contributing to the mean
    std::uint64_t first_seed = 0;
};

/// Means per (configuration, metric) in trial order; trials with an undefined
/// OSPA are left out of that metric.
std::vector<SummaryRecord> summarize(const std::vector<TrialResult>& trials);

void write_summary_csv(const std::vector<SummaryRecord>& records, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRecord>& records,
                       const std::filesystem::path& path);
std::vector<SummaryRecord> read_summary_csv(const std::filesystem::path& path);

/// "<configuration>_trial<NNN>.csv"
std::string trial_file_name(const std::string& configuration, std::size_t trial);

struct ExperimentResult {
    std::vector<TrialResult> trials;
    std::vector<SummaryRecord> summary;
    std::filesystem::path summary_path;
};

using TrialCallback = std::function<void(const TrialResult&)>;

/// Runs every configuration for spec.n_trials trials with seeds
/// base.master_seed + k, writing one trace per trial and summary.csv into
/// `out_dir` (created when missing).
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const TrialCallback& on_trial = {});

struct OracleCheckResult {
    std::size_t instances = 0;
    std::size_t optimal = 0;     ///< GRASP objective equals the oracle's
    std::size_t infeasible = 0;  ///< GRASP returned an infeasible joint
    double max_gap = 0.0;
};

/// GRASP against the exhaustive oracle on seeded toy instances.
OracleCheckResult run_oracle_check(const ToyProblemParams& toy, std::size_t n_instances,
                                   std::size_t n_samples, std::size_t n_iterations,
                                   std::uint64_t seed);

}  // namespace trackjam
