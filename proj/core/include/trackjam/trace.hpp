#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "trackjam/models.hpp"

namespace trackjam {

/// Per-agent slice of one simulation step.
struct AgentRecord {
    Vec3 position = Vec3::Zero();
    PowerLevel level = PowerLevel::off();
    Vec3 axis = Vec3::UnitZ();
    double existence = 0.0;                ///< local posterior before fusion
    std::optional<TargetState> estimate;   ///< local estimate before fusion, iff e > 0.5
    double interference_w = 0.0;           ///< power received from the other agents
    std::size_t n_measurements = 0;
};

struct StepRecord {
    int step = 0;  ///< 1-based
    bool truth_present = false;
    TargetState truth;
    std::vector<AgentRecord> agents;
    double fused_existence = 0.0;
    std::optional<TargetState> fused;  ///< CI result, when any agent had e > 0.5
    double target_received_w = 0.0;
    double ospa_m = 0.0;
    /// received_w(i, j): power at agent i from agent j (zero diagonal).
    Eigen::MatrixXd received_w;
    bool planned = false;  ///< the joint solver ran this step
};

struct Trace {
    std::vector<StepRecord> steps;
    std::size_t n_agents() const { return steps.empty() ? 0 : steps.front().agents.size(); }
};

}  // namespace trackjam
