#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackjam/control.hpp"
#include "trackjam/filter.hpp"
#include "trackjam/fusion.hpp"
#include "trackjam/metrics.hpp"
#include "trackjam/models.hpp"
#include "trackjam/random.hpp"
#include "trackjam/trace.hpp"

namespace trackjam {

/// Invalid configuration; carries every violation found.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct PresenceInterval {
    int first = 1;  ///< inclusive, 1-based
    int last = 1;   ///< inclusive
};

struct PresenceSchedule {
    enum class Kind { Always, Intervals, Stochastic };
    Kind kind = Kind::Always;
    std::vector<PresenceInterval> intervals;  ///< steps with the target present

    bool scheduled_present(int step) const;
};

/// What the truth does while scheduled absent.
enum class OcclusionMotion { Freeze, Continue };

/// Aim point used when no agent's predicted existence exceeds 0.5.
enum class PlanningFallback {
    HoldLast,  ///< keep planning toward the last aim point
    Off,       ///< everyone hovers with the lowest level
};

struct SolverParams {
    std::size_t n_samples = 10'000;
    std::size_t n_iterations = 100;
    std::size_t n_required = 2;
    NeighborMode neighbors = NeighborMode::Nearest;
    bool distributed = false;
    bool enforce_interference = true;
    PlanningFallback fallback = PlanningFallback::HoldLast;
    std::size_t oracle_cap = 1'000'000;
};

/// Cued beliefs are Gaussian around the initial aim point and the target's
/// initial velocity; uniform beliefs spread over the surveillance box.
struct InitialBeliefParams {
    enum class Kind { Cued, Uniform };
    Kind kind = Kind::Cued;
    double existence = 0.9;
    double position_std = 2.0;  ///< cued only
    double velocity_std = 1.0;
};

struct FusionParams {
    double injection_fraction = 0.5;
    CiWeightPolicy ci = CiWeightPolicy::min_trace();
};

struct ScenarioConfig {
    Box surveillance_box;
    std::size_t n_agents = 3;
    int n_steps = 30;
    std::vector<Vec3> agent_initial_positions{{30, 30, 30}, {20, 10, 10}, {10, 15, 15}};
    /// Initial antenna aim point and belief cue; the target's initial position
    /// when unset.
    std::optional<Vec3> initial_aim_point;
    TargetState target_initial{{20, 20, 20}, {1.5, 2.0, 1.7}};
    PresenceSchedule presence;
    OcclusionMotion occlusion_motion = OcclusionMotion::Freeze;

    TargetDynamicsParams dynamics;
    SensingParams sensing;  ///< max_level is derived from power_levels
    std::vector<PowerLevel> power_levels{PowerLevel::off(), PowerLevel::dbw(-50.0),
                                         PowerLevel::dbw(-7.0), PowerLevel::dbw(0.5)};
    double tolerance_db = -40.0;
    ControlGrid grid;
    SolverParams solver;
    FilterParams filter;  ///< dynamics, sensing and box are filled from above
    InitialBeliefParams initial_belief;
    FusionParams fusion;
    OspaParams ospa;
    std::optional<double> incident_threshold_db;  ///< defaults to tolerance_db
    std::uint64_t master_seed = 1;

    Vec3 aim_point() const { return initial_aim_point.value_or(target_initial.position); }
    double tolerance_w() const { return db_to_linear(tolerance_db); }
    double incident_threshold_w() const {
        return db_to_linear(incident_threshold_db.value_or(tolerance_db));
    }
    /// Sensing parameters with max_level taken from the power set.
    SensingParams effective_sensing() const;
    FilterParams effective_filter() const;

    /// Every violated invariant, empty when valid.
    std::vector<std::string> validate() const;
};

/// n_agents agent streams plus one truth and one solver stream, all keyed by
/// (master_seed, domain, index).
struct RngStreams {
    std::vector<Rng> agents;
    Rng truth;
    Rng solver;
};

RngStreams derive_rng_streams(std::uint64_t master_seed, std::size_t n_agents);

/// Per-agent solver streams for the distributed solve.
std::vector<Rng> derive_solver_streams(std::uint64_t master_seed, std::size_t n_agents);

template <class Payload>
struct Envelope {
    std::size_t sender = 0;
    Payload payload;
};

/// Synchronous lossless all-to-all exchange. Agent i's inbox holds every
/// other agent's payload in ascending sender order. Throws std::invalid_argument
/// when a payload is missing.
template <class Payload>
std::vector<std::vector<Envelope<Payload>>> message_bus_round(
    std::span<const std::optional<Payload>> payloads) {
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        if (!payloads[i]) {
            throw std::invalid_argument("message bus: missing payload from agent " +
                                        std::to_string(i));
        }
    }
    std::vector<std::vector<Envelope<Payload>>> inboxes(payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        inboxes[i].reserve(payloads.size() - 1);
        for (std::size_t j = 0; j < payloads.size(); ++j) {
            if (j != i) {
                inboxes[i].push_back({j, *payloads[j]});
            }
        }
    }
    return inboxes;
}

/// Runs the closed loop for cfg.n_steps steps. Throws ValidationError before
/// the first step when the configuration is invalid.
Trace run_scenario(const ScenarioConfig& cfg);

}  // namespace trackjam
