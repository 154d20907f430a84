#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackjam/models.hpp"
#include "trackjam/random.hpp"

namespace trackjam {

class ControlError : public std::runtime_error {
public:
    explicit ControlError(const std::string& what) : std::runtime_error(what) {}
};

/// One agent's hypothesised next position and transmit level.
struct CandidateAction {
    Vec3 position = Vec3::Zero();
    std::size_t level_index = 0;  ///< index into the agent's power set
    PowerLevel level = PowerLevel::off();
};

using JointControl = std::vector<CandidateAction>;

enum class NeighborMode { Nearest, Random };

/// One planning instance: every agent's action set, the aim point, and the
/// interference tolerances.
struct ControlProblem {
    std::vector<Vec3> prev_positions;
    /// Antenna axis kept when a hypothesised position coincides with the aim
    /// point. Empty means +z.
    std::vector<Vec3> prev_axes;
    std::vector<ControlGrid> grids;                   ///< one per agent
    std::vector<std::vector<PowerLevel>> power_sets;  ///< ascending, one per agent
    std::optional<Vec3> target_estimate;              ///< aim point x_bar
    std::size_t n_required = 2;
    std::vector<double> tolerances_w;  ///< delta^i, linear watts
    SensingParams sensing;
    bool enforce_interference = true;
    /// Candidate positions outside this box are dropped (the hover position is
    /// always kept).
    std::optional<Box> bounds;
    NeighborMode neighbor_mode = NeighborMode::Nearest;
    std::size_t proximity_list_size = 6;

    std::size_t n_agents() const { return prev_positions.size(); }
    /// Throws ControlError describing the first inconsistency.
    void validate() const;
};

/// Detection probability and interference figures of one joint control.
struct JointEvaluation {
    std::vector<double> detection;     ///< p_D per agent at the aim point
    std::vector<double> interference;  ///< watts received by each agent from the others
    double objective = 0.0;
    bool feasible = true;
};

/// Antenna axis of `agent` at `position` under the planning aim rule.
Vec3 planning_axis(const ControlProblem& prob, std::size_t agent, const Vec3& position);

/// The positions an agent may choose: admissible controls filtered by bounds.
std::vector<Vec3> candidate_positions(const ControlProblem& prob, std::size_t agent);

std::vector<double> detection_vector(const JointControl& joint, const ControlProblem& prob);

/// Received interference at each agent, summed over the other agents.
std::vector<double> interference_vector(const JointControl& joint, const ControlProblem& prob);

/// Every agent's interference strictly below its tolerance.
bool interference_feasible(const JointControl& joint, const ControlProblem& prob);

JointEvaluation evaluate_joint(const JointControl& joint, const ControlProblem& prob);

/// Best action for a lone agent: argmax p_D at `estimate`; hover + lowest
/// level (off) when there is no estimate. Ties prefer the lower level, then the
/// lexicographically smaller position.
CandidateAction single_agent_control(const Vec3& agent_pos, const ControlGrid& grid,
                                     std::span<const PowerLevel> levels,
                                     const std::optional<Vec3>& estimate,
                                     const SensingParams& sensing,
                                     const Vec3& prev_axis = Vec3::UnitZ());

/// Best feasible joint among n_samples uniform draws; all-off at the previous
/// positions when none is feasible.
JointControl grasp_greedy_randomized(const ControlProblem& prob, std::size_t n_samples, Rng& rng);

/// One pass of per-agent neighbourhood search; never returns a worse joint.
JointControl grasp_local_search(const JointControl& joint, const ControlProblem& prob, Rng& rng);

struct GraspReport {
    JointControl joint;
    double objective = 0.0;
    double best_greedy_objective = 0.0;
    bool feasible = true;
};

GraspReport grasp_solve_report(const ControlProblem& prob, std::size_t n_samples,
                               std::size_t n_iterations, Rng& rng);

/// Alternates greedy randomised construction and local search n_iterations
/// times and keeps the best feasible joint.
JointControl grasp_solve(const ControlProblem& prob, std::size_t n_samples,
                         std::size_t n_iterations, Rng& rng);

/// Each agent solves the shared problem with its own stream; the best result
/// wins, ties going to the lower agent id.
GraspReport grasp_solve_distributed(const ControlProblem& prob, std::size_t n_samples,
                                    std::size_t n_iterations, std::span<Rng> agent_streams);

/// True argmax over every joint. Throws ControlError if the joint space is
/// larger than `cap`.
JointControl exhaustive_oracle(const ControlProblem& prob, std::size_t cap = 1'000'000);

/// Objective of `joint` (with the solvers' deterministic tie-break order,
/// `a` is preferred to `b` iff compare_joints(a, b, prob) < 0).
double joint_objective(const JointControl& joint, const ControlProblem& prob);
int compare_joints(const JointControl& a, const JointControl& b, const ControlProblem& prob);

/// Parameters of the small random instances used to cross-check GRASP
/// against the exhaustive oracle.
struct ToyProblemParams {
    std::size_t n_agents = 2;
    double min_range = 2.0;
    double max_range = 12.0;
    double min_step = 1.0;
    double max_step = 5.0;
    double tolerance_w = 1e-4;
    std::vector<PowerLevel> levels{PowerLevel::off(), PowerLevel::dbw(-50.0),
                                   PowerLevel::dbw(-7.0), PowerLevel::dbw(0.5)};
    SensingParams sensing;
};

/// Agents scattered around a fixed aim point, each with a 5-position grid
/// (4 directions plus hover).
ControlProblem random_toy_problem(const ToyProblemParams& params, Rng& rng);

}  // namespace trackjam
