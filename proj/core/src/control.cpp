#include "trackjam/control.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "trackjam/poisson_binomial.hpp"

namespace trackjam {

void ControlProblem::validate() const {
    const std::size_t n = n_agents();
    if (n == 0) {
        throw ControlError("control problem has no agents");
    }
    if (grids.size() != n || power_sets.size() != n || tolerances_w.size() != n) {
        throw ControlError("control problem: per-agent lists must have one entry per agent");
    }
    if (!prev_axes.empty() && prev_axes.size() != n) {
        throw ControlError("control problem: prev_axes must be empty or one per agent");
    }
    if (n_required < 1 || n_required > n) {
        throw ControlError("control problem: n_required must lie in [1, N]");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (power_sets[j].empty()) {
            throw ControlError("control problem: empty power set");
        }
        if (!(tolerances_w[j] > 0.0)) {
            throw ControlError("control problem: tolerances must be positive");
        }
        for (std::size_t l = 1; l < power_sets[j].size(); ++l) {
            const double prev = power_sets[j][l - 1].watts();
            if (!(power_sets[j][l].watts() > prev)) {
                throw ControlError("control problem: power sets must be strictly ascending");
            }
        }
    }
}

Vec3 planning_axis(const ControlProblem& prob, std::size_t agent, const Vec3& position) {
    const Vec3 fallback = prob.prev_axes.empty() ? Vec3::UnitZ() : prob.prev_axes[agent];
    if (!prob.target_estimate) {
        return fallback;
    }
    return try_aim_axis(position, *prob.target_estimate).value_or(fallback);
}

std::vector<Vec3> candidate_positions(const ControlProblem& prob, std::size_t agent) {
    const Vec3& origin = prob.prev_positions[agent];
    std::vector<Vec3> all = admissible_controls(origin, prob.grids[agent]);
    if (!prob.bounds) {
        return all;
    }
    std::vector<Vec3> kept;
    kept.reserve(all.size());
    for (const Vec3& p : all) {
        if (prob.bounds->contains(p) || p == origin) {
            kept.push_back(p);
        }
    }
    return kept;
}

namespace {

bool lex_less(const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

/// Precomputed action tables for one ControlProblem. Joints are handled as
/// (position index, level index) pairs per agent.
class Planner {
public:
    struct Action {
        std::uint32_t pos = 0;
        std::uint32_t level = 0;
    };
    using Joint = std::vector<Action>;

    explicit Planner(const ControlProblem& prob) : prob_(prob), n_(prob.n_agents()) {
        prob.validate();
        agents_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            AgentTable& t = agents_[j];
            t.positions = candidate_positions(prob, j);
            t.n_sample = t.positions.size();
            const Vec3& origin = prob.prev_positions[j];
            const auto it = std::find(t.positions.begin(), t.positions.end(), origin);
            if (it == t.positions.end()) {
                t.positions.push_back(origin);  // fallback-only entry
            }
            t.stay = static_cast<std::uint32_t>(
                std::find(t.positions.begin(), t.positions.end(), origin) - t.positions.begin());
            if (t.n_sample == 0) {
                throw ControlError("control problem: agent has no admissible positions");
            }
            const auto& levels = prob.power_sets[j];
            t.n_levels = levels.size();
            t.watts.resize(t.n_levels);
            for (std::size_t l = 0; l < t.n_levels; ++l) {
                t.watts[l] = levels[l].watts();
            }
            const std::size_t np = t.positions.size();
            t.axes.resize(np);
            t.pd.assign(np * t.n_levels, 0.0);
            for (std::size_t p = 0; p < np; ++p) {
                t.axes[p] = planning_axis(prob, j, t.positions[p]);
                if (prob.target_estimate) {
                    const SensingCone cone = prob.sensing.cone(t.positions[p], t.axes[p]);
                    for (std::size_t l = 0; l < t.n_levels; ++l) {
                        t.pd[p * t.n_levels + l] = detection_prob(
                            *prob.target_estimate, t.positions[p], levels[l], cone, prob.sensing);
                    }
                }
            }
            // lexicographic rank of every position, for tie-breaking
            std::vector<std::uint32_t> order(np);
            std::iota(order.begin(), order.end(), 0U);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
                return lex_less(t.positions[a], t.positions[b]);
            });
            t.rank.resize(np);
            for (std::uint32_t r = 0; r < np; ++r) {
                t.rank[order[r]] = r;
            }
            t.neighbors.resize(np);
            const std::size_t keep = prob.neighbor_mode == NeighborMode::Nearest
                                         ? 2
                                         : std::max<std::size_t>(2, prob.proximity_list_size);
            for (std::size_t p = 0; p < np; ++p) {
                std::vector<std::uint32_t> others;
                for (std::uint32_t q = 0; q < t.n_sample; ++q) {
                    if (q != p && t.positions[q] != t.positions[p]) {
                        others.push_back(q);
                    }
                }
                std::stable_sort(others.begin(), others.end(), [&](auto a, auto b) {
                    const double da = (t.positions[a] - t.positions[p]).squaredNorm();
                    const double db = (t.positions[b] - t.positions[p]).squaredNorm();
                    if (da != db) {
                        return da < db;
                    }
                    return t.rank[a] < t.rank[b];
                });
                others.resize(std::min(keep, others.size()));
                t.neighbors[p] = std::move(others);
            }
        }
        build_gain_tables();
    }

    std::size_t n_agents() const { return n_; }
    std::size_t n_sample(std::size_t j) const { return agents_[j].n_sample; }
    std::size_t n_levels(std::size_t j) const { return agents_[j].n_levels; }

    double objective(const Joint& joint) const {
        std::array<double, 64> inline_pd{};
        std::vector<double> heap;
        double* pd = inline_pd.data();
        if (n_ > inline_pd.size()) {
            heap.resize(n_);
            pd = heap.data();
        }
        for (std::size_t j = 0; j < n_; ++j) {
            const AgentTable& t = agents_[j];
            pd[j] = t.pd[joint[j].pos * t.n_levels + joint[j].level];
        }
        return objective_at_least_n(std::span<const double>(pd, n_), prob_.n_required);
    }

    double interference_at(const Joint& joint, std::size_t i) const {
        double total = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j == i) {
                continue;
            }
            const double w = agents_[j].watts[joint[j].level];
            if (w == 0.0) {
                continue;
            }
            total += w * gain(i, joint[i].pos, j, joint[j].pos);
        }
        return total;
    }

    bool truly_feasible(const Joint& joint) const {
        for (std::size_t i = 0; i < n_; ++i) {
            if (!(interference_at(joint, i) < prob_.tolerances_w[i])) {
                return false;
            }
        }
        return true;
    }

    bool feasible(const Joint& joint) const {
        return !prob_.enforce_interference || truly_feasible(joint);
    }

    /// <0 when a sorts before b in the tie-break order.
    int compare_keys(const Joint& a, const Joint& b) const {
        for (std::size_t j = 0; j < n_; ++j) {
            if (a[j].level != b[j].level) {
                return a[j].level < b[j].level ? -1 : 1;
            }
            const auto ra = agents_[j].rank[a[j].pos];
            const auto rb = agents_[j].rank[b[j].pos];
            if (ra != rb) {
                return ra < rb ? -1 : 1;
            }
        }
        return 0;
    }

    /// Candidate (a, obj_a) preferred over incumbent (b, obj_b)?
    bool better(const Joint& a, double obj_a, const Joint& b, double obj_b) const {
        if (obj_a != obj_b) {
            return obj_a > obj_b;
        }
        return compare_keys(a, b) < 0;
    }

    Joint fallback() const {
        Joint j(n_);
        for (std::size_t a = 0; a < n_; ++a) {
            j[a] = {agents_[a].stay, 0};
        }
        return j;
    }

    Joint greedy(std::size_t n_samples, Rng& rng) const {
        Joint best;
        double best_obj = -1.0;
        Joint cand(n_);
        for (std::size_t s = 0; s < n_samples; ++s) {
            for (std::size_t j = 0; j < n_; ++j) {
                cand[j].pos = static_cast<std::uint32_t>(rng.index(agents_[j].n_sample));
                cand[j].level = static_cast<std::uint32_t>(rng.index(agents_[j].n_levels));
            }
            consider(cand, best, best_obj);
        }
        if (best.empty()) {
            return fallback();
        }
        return best;
    }

    Joint local_search(const Joint& start, Rng& rng) const {
        Joint current = start;
        double current_obj = objective(current);
        for (std::size_t j = 0; j < n_; ++j) {
            const AgentTable& t = agents_[j];
            const Action here = current[j];
            std::array<std::uint32_t, 3> positions{here.pos, here.pos, here.pos};
            const auto& near = t.neighbors[here.pos];
            if (prob_.neighbor_mode == NeighborMode::Nearest || near.size() <= 2) {
                for (std::size_t k = 0; k < near.size() && k < 2; ++k) {
                    positions[k + 1] = near[k];
                }
            } else {
                const std::size_t first = rng.index(near.size());
                std::size_t second = rng.index(near.size() - 1);
                if (second >= first) {
                    ++second;
                }
                positions[1] = near[first];
                positions[2] = near[second];
            }
            const std::uint32_t top = static_cast<std::uint32_t>(t.n_levels - 1);
            const std::array<std::uint32_t, 3> levels{here.level == 0 ? 0 : here.level - 1,
                                                      here.level, std::min(here.level + 1, top)};
            Joint cand = current;
            Joint best = current;
            double best_obj = current_obj;
            for (auto p : positions) {
                for (auto l : levels) {
                    cand[j] = {p, l};
                    const double obj = objective(cand);
                    if (better(cand, obj, best, best_obj) && feasible(cand)) {
                        best = cand;
                        best_obj = obj;
                    }
                }
            }
            current = std::move(best);
            current_obj = best_obj;
        }
        return current;
    }

    Joint exhaustive(std::size_t cap) const {
        double space = 1.0;
        for (const auto& t : agents_) {
            space *= static_cast<double>(t.n_sample * t.n_levels);
        }
        if (space > static_cast<double>(cap)) {
            throw ControlError("exhaustive_oracle: joint space exceeds cap");
        }
        Joint cand(n_);
        Joint best;
        double best_obj = -1.0;
        for (;;) {
            consider(cand, best, best_obj);
            std::size_t j = 0;
            for (; j < n_; ++j) {
                const AgentTable& t = agents_[j];
                if (++cand[j].level < t.n_levels) {
                    break;
                }
                cand[j].level = 0;
                if (++cand[j].pos < t.n_sample) {
                    break;
                }
                cand[j].pos = 0;
            }
            if (j == n_) {
                break;
            }
        }
        return best.empty() ? fallback() : best;
    }

    JointControl to_joint(const Joint& joint) const {
        JointControl out(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            out[j].position = agents_[j].positions[joint[j].pos];
            out[j].level_index = joint[j].level;
            out[j].level = prob_.power_sets[j][joint[j].level];
        }
        return out;
    }

    Joint from_joint(const JointControl& joint) const {
        if (joint.size() != n_) {
            throw ControlError("joint control length differs from the number of agents");
        }
        Joint out(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            const AgentTable& t = agents_[j];
            const auto it = std::find_if(t.positions.begin(), t.positions.end(), [&](const Vec3& p) {
                return (p - joint[j].position).norm() <= 1e-9;
            });
            if (it == t.positions.end() || joint[j].level_index >= t.n_levels) {
                throw ControlError("joint control entry is not admissible for agent " +
                                   std::to_string(j));
            }
            out[j] = {static_cast<std::uint32_t>(it - t.positions.begin()),
                      static_cast<std::uint32_t>(joint[j].level_index)};
        }
        return out;
    }

private:
    struct AgentTable {
        std::vector<Vec3> positions;
        std::size_t n_sample = 0;  ///< positions[0, n_sample) are sampleable
        std::uint32_t stay = 0;
        std::size_t n_levels = 0;
        std::vector<double> watts;
        std::vector<Vec3> axes;
        std::vector<double> pd;  ///< [pos * n_levels + level]
        std::vector<std::uint32_t> rank;
        std::vector<std::vector<std::uint32_t>> neighbors;
    };

    void consider(const Joint& cand, Joint& best, double& best_obj) const {
        const double obj = objective(cand);
        if (!best.empty() && !better(cand, obj, best, best_obj)) {
            return;
        }
        if (!feasible(cand)) {
            return;
        }
        best = cand;
        best_obj = obj;
    }

    void build_gain_tables() {
        constexpr double kMaxEntries = 3.0e7;
        double entries = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i != j) {
                    entries += static_cast<double>(agents_[i].positions.size()) *
                               static_cast<double>(agents_[j].positions.size());
                }
            }
        }
        if (entries > kMaxEntries) {
            return;  // evaluate on demand
        }
        gains_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i == j) {
                    continue;
                }
                const auto& ti = agents_[i];
                const auto& tj = agents_[j];
                auto& table = gains_[i * n_ + j];
                table.resize(ti.positions.size() * tj.positions.size());
                for (std::size_t pj = 0; pj < tj.positions.size(); ++pj) {
                    const SensingCone cone = prob_.sensing.cone(tj.positions[pj], tj.axes[pj]);
                    for (std::size_t pi = 0; pi < ti.positions.size(); ++pi) {
                        table[pi * tj.positions.size() + pj] =
                            path_gain(ti.positions[pi], cone, prob_.sensing);
                    }
                }
            }
        }
    }

    double gain(std::size_t i, std::uint32_t pi, std::size_t j, std::uint32_t pj) const {
        if (!gains_.empty()) {
            return gains_[i * n_ + j][pi * agents_[j].positions.size() + pj];
        }
        const auto& tj = agents_[j];
        const SensingCone cone = prob_.sensing.cone(tj.positions[pj], tj.axes[pj]);
        return path_gain(agents_[i].positions[pi], cone, prob_.sensing);
    }

    const ControlProblem& prob_;
    std::size_t n_;
    std::vector<AgentTable> agents_;
    std::vector<std::vector<double>> gains_;  ///< [i * n + j][p_i * |P_j| + p_j]
};

std::vector<SensingCone> joint_cones(const JointControl& joint, const ControlProblem& prob) {
    std::vector<SensingCone> cones;
    cones.reserve(joint.size());
    for (std::size_t j = 0; j < joint.size(); ++j) {
        cones.push_back(
            prob.sensing.cone(joint[j].position, planning_axis(prob, j, joint[j].position)));
    }
    return cones;
}

}  // namespace

std::vector<double> detection_vector(const JointControl& joint, const ControlProblem& prob) {
    if (!prob.target_estimate) {
        throw ControlError("detection_vector: no target estimate");
    }
    const auto cones = joint_cones(joint, prob);
    std::vector<double> out(joint.size());
    for (std::size_t j = 0; j < joint.size(); ++j) {
        out[j] = detection_prob(*prob.target_estimate, joint[j].position, joint[j].level,
                                cones[j], prob.sensing);
    }
    return out;
}

std::vector<double> interference_vector(const JointControl& joint, const ControlProblem& prob) {
    const auto cones = joint_cones(joint, prob);
    std::vector<double> out(joint.size(), 0.0);
    for (std::size_t i = 0; i < joint.size(); ++i) {
        for (std::size_t j = 0; j < joint.size(); ++j) {
            if (i != j) {
                out[i] += received_power(joint[i].position, joint[j].position, joint[j].level,
                                         cones[j], prob.sensing);
            }
        }
    }
    return out;
}

bool interference_feasible(const JointControl& joint, const ControlProblem& prob) {
    const auto rx = interference_vector(joint, prob);
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (!(rx[i] < prob.tolerances_w.at(i))) {
            return false;
        }
    }
    return true;
}

JointEvaluation evaluate_joint(const JointControl& joint, const ControlProblem& prob) {
    JointEvaluation ev;
    ev.detection = detection_vector(joint, prob);
    ev.interference = interference_vector(joint, prob);
    ev.objective = objective_at_least_n(ev.detection, prob.n_required);
    ev.feasible = true;
    for (std::size_t i = 0; i < ev.interference.size(); ++i) {
        ev.feasible = ev.feasible && ev.interference[i] < prob.tolerances_w.at(i);
    }
    return ev;
}

CandidateAction single_agent_control(const Vec3& agent_pos, const ControlGrid& grid,
                                     std::span<const PowerLevel> levels,
                                     const std::optional<Vec3>& estimate,
                                     const SensingParams& sensing, const Vec3& prev_axis) {
    if (levels.empty()) {
        throw ControlError("single_agent_control: empty power set");
    }
    if (!estimate) {
        return {agent_pos, 0, levels[0]};
    }
    CandidateAction best{agent_pos, 0, levels[0]};
    double best_pd = -1.0;
    for (const Vec3& u : admissible_controls(agent_pos, grid)) {
        const Vec3 axis = try_aim_axis(u, *estimate).value_or(prev_axis);
        const SensingCone cone = sensing.cone(u, axis);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const double pd = detection_prob(*estimate, u, levels[l], cone, sensing);
            const bool wins =
                pd > best_pd ||
                (pd == best_pd && (l < best.level_index ||
                                   (l == best.level_index && lex_less(u, best.position))));
            if (wins) {
                best = {u, l, levels[l]};
                best_pd = pd;
            }
        }
    }
    return best;
}

JointControl grasp_greedy_randomized(const ControlProblem& prob, std::size_t n_samples, Rng& rng) {
    const Planner planner(prob);
    return planner.to_joint(planner.greedy(n_samples, rng));
}

JointControl grasp_local_search(const JointControl& joint, const ControlProblem& prob, Rng& rng) {
    const Planner planner(prob);
    return planner.to_joint(planner.local_search(planner.from_joint(joint), rng));
}

GraspReport grasp_solve_report(const ControlProblem& prob, std::size_t n_samples,
                               std::size_t n_iterations, Rng& rng) {
    if (!prob.target_estimate) {
        throw ControlError("grasp_solve: no target estimate");
    }
    if (n_samples == 0 || n_iterations == 0) {
        throw ControlError("grasp_solve: n_samples and n_iterations must be >= 1");
    }
    const Planner planner(prob);
    Planner::Joint best;
    double best_obj = -1.0;
    double best_greedy = -1.0;
    for (std::size_t it = 0; it < n_iterations; ++it) {
        const Planner::Joint initial = planner.greedy(n_samples, rng);
        best_greedy = std::max(best_greedy, planner.objective(initial));
        const Planner::Joint improved = planner.local_search(initial, rng);
        const double obj = planner.objective(improved);
        if (best.empty() || planner.better(improved, obj, best, best_obj)) {
            best = improved;
            best_obj = obj;
        }
    }
    GraspReport report;
    report.joint = planner.to_joint(best);
    report.objective = best_obj;
    report.best_greedy_objective = best_greedy;
    report.feasible = planner.truly_feasible(best);
    return report;
}

JointControl grasp_solve(const ControlProblem& prob, std::size_t n_samples,
                         std::size_t n_iterations, Rng& rng) {
    return grasp_solve_report(prob, n_samples, n_iterations, rng).joint;
}

GraspReport grasp_solve_distributed(const ControlProblem& prob, std::size_t n_samples,
                                    std::size_t n_iterations, std::span<Rng> agent_streams) {
    if (agent_streams.size() != prob.n_agents()) {
        throw ControlError("grasp_solve_distributed: one stream per agent required");
    }
    std::optional<GraspReport> best;
    for (Rng& stream : agent_streams) {
        GraspReport local = grasp_solve_report(prob, n_samples, n_iterations, stream);
        if (!best || local.objective > best->objective) {
            best = std::move(local);
        }
    }
    return *best;
}

JointControl exhaustive_oracle(const ControlProblem& prob, std::size_t cap) {
    const Planner planner(prob);
    return planner.to_joint(planner.exhaustive(cap));
}

double joint_objective(const JointControl& joint, const ControlProblem& prob) {
    return objective_at_least_n(detection_vector(joint, prob), prob.n_required);
}

int compare_joints(const JointControl& a, const JointControl& b, const ControlProblem& prob) {
    const Planner planner(prob);
    const auto ja = planner.from_joint(a);
    const auto jb = planner.from_joint(b);
    const double oa = planner.objective(ja);
    const double ob = planner.objective(jb);
    if (planner.better(ja, oa, jb, ob)) {
        return -1;
    }
    if (planner.better(jb, ob, ja, oa)) {
        return 1;
    }
    return 0;
}

ControlProblem random_toy_problem(const ToyProblemParams& params, Rng& rng) {
    ControlProblem prob;
    const Vec3 aim(50.0, 50.0, 50.0);
    prob.target_estimate = aim;
    prob.sensing = params.sensing;
    prob.sensing.max_level = params.levels.back();
    const double step = rng.uniform(params.min_step, params.max_step);
    for (std::size_t j = 0; j < params.n_agents; ++j) {
        Vec3 dir(rng.normal(), rng.normal(), rng.normal());
        dir.normalize();
        const double range = rng.uniform(params.min_range, params.max_range);
        const Vec3 pos = aim + range * dir;
        prob.prev_positions.push_back(pos);
        prob.prev_axes.push_back(aim_axis(pos, aim));
        ControlGrid grid;
        grid.radial_steps = {step};
        grid.n_phi = 2;
        grid.n_theta = 2;
        grid.include_hover = true;
        prob.grids.push_back(grid);
        prob.power_sets.push_back(params.levels);
        prob.tolerances_w.push_back(params.tolerance_w);
    }
    prob.n_required = 1 + rng.index(params.n_agents);
    return prob;
}

}  // namespace trackjam
