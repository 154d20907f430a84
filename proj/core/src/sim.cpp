#include "trackjam/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace trackjam {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::ostringstream os;
    os << "invalid configuration";
    for (const auto& p : problems) {
        os << "\n  - " << p;
    }
    return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

bool PresenceSchedule::scheduled_present(int step) const {
    switch (kind) {
        case Kind::Always:
            return true;
        case Kind::Intervals:
            return std::any_of(intervals.begin(), intervals.end(), [&](const PresenceInterval& iv) {
                return step >= iv.first && step <= iv.last;
            });
        case Kind::Stochastic:
            break;
    }
    return true;
}

SensingParams ScenarioConfig::effective_sensing() const {
    SensingParams s = sensing;
    if (!power_levels.empty()) {
        s.max_level = power_levels.back();
    }
    return s;
}

FilterParams ScenarioConfig::effective_filter() const {
    FilterParams f = filter;
    f.dynamics = dynamics;
    f.sensing = effective_sensing();
    f.surveillance_box = surveillance_box;
    return f;
}

std::vector<std::string> ScenarioConfig::validate() const {
    std::vector<std::string> errs;
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) {
            errs.push_back(msg);
        }
    };
    require((surveillance_box.hi.array() > surveillance_box.lo.array()).all(),
            "surveillance_box: max must exceed min on every axis");
    require(n_agents >= 1, "n_agents must be >= 1");
    require(n_steps >= 1, "n_steps must be >= 1");
    require(agent_initial_positions.size() == n_agents,
            "agent_initial_positions must list exactly n_agents positions");
    for (std::size_t j = 0; j < agent_initial_positions.size(); ++j) {
        require(agent_initial_positions[j].allFinite() &&
                    surveillance_box.contains(agent_initial_positions[j]),
                "agent_initial_positions[" + std::to_string(j) + "] lies outside the box");
    }
    require(target_initial.position.allFinite() && target_initial.velocity.allFinite(),
            "target_initial_state must be finite");
    require(surveillance_box.contains(target_initial.position),
            "target_initial_state position lies outside the box");
    if (presence.kind == PresenceSchedule::Kind::Intervals) {
        auto sorted = presence.intervals;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            const auto& iv = sorted[k];
            require(iv.first >= 1 && iv.last <= n_steps && iv.first <= iv.last,
                    "presence interval [" + std::to_string(iv.first) + ", " +
                        std::to_string(iv.last) + "] must lie within [1, n_steps]");
            if (k > 0) {
                require(sorted[k - 1].last < iv.first, "presence intervals must be disjoint");
            }
        }
    }
    require(dynamics.dt > 0.0, "dynamics.dt must be > 0");
    require(dynamics.p_birth >= 0.0 && dynamics.p_birth <= 1.0,
            "dynamics.p_birth must lie in [0, 1]");
    require(dynamics.p_survive >= 0.0 && dynamics.p_survive <= 1.0,
            "dynamics.p_survive must lie in [0, 1]");
    {
        const Mat3& q = dynamics.accel_noise_cov;
        const bool symmetric = (q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
        Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (q + q.transpose()));
        require(symmetric && eig.eigenvalues().minCoeff() >= -1e-12,
                "dynamics.accel_noise_cov must be symmetric positive semi-definite");
    }
    require(sensing.p_d_max > 0.0 && sensing.p_d_max <= 1.0, "sensing.p_d_max must lie in (0, 1]");
    require(sensing.r0 > 0.0, "sensing.r0 must be > 0");
    require(sensing.path_loss_exp > 0.0, "sensing.path_loss_exp must be > 0");
    require(sensing.cone_height > 0.0, "sensing.cone_height must be > 0");
    require(sensing.cone_angle > 0.0 && sensing.cone_angle < std::numbers::pi,
            "sensing.cone_angle must lie in (0, 180) degrees");
    {
        const Mat3& r = sensing.meas_noise_cov;
        const bool diagonal = (r - Mat3(r.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
        require(diagonal && (r.diagonal().array() > 0.0).all(),
                "sensing.meas_noise must be a positive diagonal covariance");
    }
    require(sensing.clutter_rate >= 0.0, "sensing.clutter_rate must be >= 0");
    require(!power_levels.empty(), "sensing.power_levels must not be empty");
    for (std::size_t l = 1; l < power_levels.size(); ++l) {
        require(power_levels[l].watts() > power_levels[l - 1].watts(),
                "sensing.power_levels must be strictly ascending");
    }
    require(!power_levels.empty() && !power_levels.back().is_off(),
            "sensing.power_levels needs at least one level above off");
    require(!grid.radial_steps.empty(), "control.radial_steps must not be empty");
    for (double r : grid.radial_steps) {
        require(r > 0.0, "control.radial_steps entries must be > 0");
    }
    require(grid.n_phi >= 1, "control.n_phi must be >= 1");
    require(grid.n_theta >= 1, "control.n_theta must be >= 1");
    require(solver.n_samples >= 1, "control.samples must be >= 1");
    require(solver.n_iterations >= 1, "control.iterations must be >= 1");
    require(solver.n_required >= 1 && solver.n_required <= n_agents,
            "control.n_required must lie in [1, n_agents]");
    require(filter.n_particles > 0, "filter.n_particles must be > 0");
    require(filter.n_birth_particles > 0, "filter.n_birth_particles must be > 0");
    require(filter.resample_threshold > 0.0 && filter.resample_threshold <= 1.0,
            "filter.resample_threshold must lie in (0, 1]");
    require(filter.birth_velocity_std >= 0.0, "filter.birth_velocity_std must be >= 0");
    require(initial_belief.existence >= 0.0 && initial_belief.existence <= 1.0,
            "filter.initial_existence must lie in [0, 1]");
    require(initial_belief.position_std >= 0.0 && initial_belief.velocity_std >= 0.0,
            "filter.initial_*_std must be >= 0");
    require(fusion.injection_fraction >= 0.0 && fusion.injection_fraction <= 1.0,
            "fusion.injection_fraction must lie in [0, 1]");
    require(fusion.ci.kind == CiWeightPolicy::Kind::MinTrace ||
                (fusion.ci.omega >= 0.0 && fusion.ci.omega <= 1.0),
            "fusion.ci_weight must lie in [0, 1]");
    require(ospa.order >= 1.0, "metrics.ospa_order must be >= 1");
    require(ospa.cutoff > 0.0, "metrics.ospa_cutoff must be > 0");
    return errs;
}

RngStreams derive_rng_streams(std::uint64_t master_seed, std::size_t n_agents) {
    RngStreams streams{{},
                       Rng::keyed(master_seed, static_cast<std::uint64_t>(StreamDomain::Truth), 0),
                       Rng::keyed(master_seed, static_cast<std::uint64_t>(StreamDomain::Solver), 0)};
    streams.agents.reserve(n_agents);
    for (std::size_t j = 0; j < n_agents; ++j) {
        streams.agents.push_back(
            Rng::keyed(master_seed, static_cast<std::uint64_t>(StreamDomain::Agent), j));
    }
    return streams;
}

std::vector<Rng> derive_solver_streams(std::uint64_t master_seed, std::size_t n_agents) {
    std::vector<Rng> out;
    out.reserve(n_agents);
    for (std::size_t j = 0; j < n_agents; ++j) {
        out.push_back(
            Rng::keyed(master_seed, static_cast<std::uint64_t>(StreamDomain::Solver), j + 1));
    }
    return out;
}

namespace {

struct AgentContext {
    std::size_t id = 0;
    Vec3 position;
    Vec3 axis;
    PowerLevel level = PowerLevel::off();
    BernoulliBelief belief;
    Rng rng;
};

/// What agents broadcast before planning.
struct PlanningPayload {
    Vec3 position;
    std::optional<Vec3> predicted_estimate;
};

/// Keeps the truth inside the box, reflecting the velocity at the walls.
void confine(TargetState& x, const Box& box) {
    for (int k = 0; k < 3; ++k) {
        if (x.position[k] < box.lo[k]) {
            x.position[k] = box.lo[k];
            x.velocity[k] = std::abs(x.velocity[k]);
        } else if (x.position[k] > box.hi[k]) {
            x.position[k] = box.hi[k];
            x.velocity[k] = -std::abs(x.velocity[k]);
        }
    }
}

class TruthProcess {
public:
    TruthProcess(const ScenarioConfig& cfg, Rng rng)
        : cfg_(cfg), rng_(std::move(rng)), state_(cfg.target_initial) {}

    void advance(int step) {
        const auto& dyn = cfg_.dynamics;
        if (cfg_.presence.kind == PresenceSchedule::Kind::Stochastic) {
            if (present_) {
                present_ = rng_.bernoulli(dyn.p_survive);
                if (present_) {
                    state_ = target_step(state_, dyn, rng_);
                }
            } else if (rng_.bernoulli(dyn.p_birth)) {
                present_ = true;
                state_.position = cfg_.surveillance_box.sample(rng_);
                const GaussianSampler vel(Eigen::Vector3d::Zero(),
                                          dyn.accel_noise_cov * dyn.dt * dyn.dt);
                state_.velocity = vel.sample(rng_);
            }
        } else {
            present_ = cfg_.presence.scheduled_present(step);
            if (present_ || cfg_.occlusion_motion == OcclusionMotion::Continue) {
                state_ = target_step(state_, dyn, rng_);
            }
        }
        confine(state_, cfg_.surveillance_box);
    }

    bool present() const { return present_; }
    const TargetState& state() const { return state_; }

private:
    const ScenarioConfig& cfg_;
    Rng rng_;
    TargetState state_;
    bool present_ = true;
};

BernoulliBelief initial_belief(const ScenarioConfig& cfg, const FilterParams& fp, Rng& rng) {
    const auto& ib = cfg.initial_belief;
    if (ib.kind == InitialBeliefParams::Kind::Uniform) {
        return make_uniform_belief(ib.existence, cfg.surveillance_box, ib.velocity_std,
                                   fp.n_particles, rng);
    }
    GaussianEstimate prior;
    prior.mean << cfg.aim_point(), cfg.target_initial.velocity;
    prior.cov.setZero();
    prior.cov.diagonal() << Vec3::Constant(ib.position_std * ib.position_std),
        Vec3::Constant(ib.velocity_std * ib.velocity_std);
    return make_belief(ib.existence, prior, fp.n_particles, rng);
}

}  // namespace

Trace run_scenario(const ScenarioConfig& cfg) {
    if (auto errs = cfg.validate(); !errs.empty()) {
        throw ValidationError(std::move(errs));
    }
    const std::size_t n = cfg.n_agents;
    const SensingParams sensing = cfg.effective_sensing();
    const FilterParams fparams = cfg.effective_filter();
    const double tolerance_w = cfg.tolerance_w();

    RngStreams streams = derive_rng_streams(cfg.master_seed, n);
    std::vector<Rng> solver_streams;
    if (cfg.solver.distributed) {
        solver_streams = derive_solver_streams(cfg.master_seed, n);
    }
    TruthProcess truth(cfg, std::move(streams.truth));

    std::vector<AgentContext> agents;
    agents.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        AgentContext ctx{j, cfg.agent_initial_positions[j], Vec3::UnitZ(), PowerLevel::off(), {},
                         std::move(streams.agents[j])};
        ctx.axis = try_aim_axis(ctx.position, cfg.aim_point()).value_or(Vec3::UnitZ());
        ctx.belief = initial_belief(cfg, fparams, ctx.rng);
        agents.push_back(std::move(ctx));
    }

    std::optional<Vec3> last_aim = cfg.aim_point();
    Trace trace;
    trace.steps.reserve(static_cast<std::size_t>(cfg.n_steps));

    for (int t = 1; t <= cfg.n_steps; ++t) {
        StepRecord rec;
        rec.step = t;

        // (1) truth
        truth.advance(t);
        rec.truth_present = truth.present();
        rec.truth = truth.state();

        // (2) local prediction and predicted estimate
        std::vector<BernoulliBelief> predicted(n);
        std::vector<std::optional<PlanningPayload>> payloads(n);
        for (auto& a : agents) {
            predicted[a.id] = predict(a.belief, fparams, a.rng);
            PlanningPayload payload{a.position, std::nullopt};
            if (predicted[a.id].existence > 0.5) {
                if (auto m = particle_mean(predicted[a.id].particles)) {
                    payload.predicted_estimate = Vec3(m->head<3>());
                }
            }
            payloads[a.id] = payload;
        }

        // (3) exchange; every agent assembles the same aim point from its inbox
        const auto inboxes = message_bus_round<PlanningPayload>(payloads);
        std::optional<Vec3> aim;
        {
            Vec3 sum = Vec3::Zero();
            std::size_t count = 0;
            if (payloads[0]->predicted_estimate) {
                sum += *payloads[0]->predicted_estimate;
                ++count;
            }
            for (const auto& env : inboxes[0]) {
                if (env.payload.predicted_estimate) {
                    sum += *env.payload.predicted_estimate;
                    ++count;
                }
            }
            if (count > 0) {
                aim = Vec3(sum / static_cast<double>(count));
            } else if (cfg.solver.fallback == PlanningFallback::HoldLast) {
                aim = last_aim;
            }
        }

        // (4)-(5) joint planning
        JointControl joint(n);
        if (aim) {
            ControlProblem prob;
            prob.target_estimate = aim;
            prob.n_required = cfg.solver.n_required;
            prob.sensing = sensing;
            prob.enforce_interference = cfg.solver.enforce_interference;
            prob.bounds = cfg.surveillance_box;
            prob.neighbor_mode = cfg.solver.neighbors;
            for (const auto& a : agents) {
                prob.prev_positions.push_back(a.position);
                prob.prev_axes.push_back(a.axis);
                prob.grids.push_back(cfg.grid);
                prob.power_sets.push_back(cfg.power_levels);
                prob.tolerances_w.push_back(tolerance_w);
            }
            if (cfg.solver.distributed) {
                joint = grasp_solve_distributed(prob, cfg.solver.n_samples,
                                                cfg.solver.n_iterations, solver_streams)
                            .joint;
            } else {
                joint = grasp_solve(prob, cfg.solver.n_samples, cfg.solver.n_iterations,
                                    streams.solver);
            }
            rec.planned = true;
            last_aim = aim;
        } else {
            for (const auto& a : agents) {
                joint[a.id] = {a.position, 0, cfg.power_levels.front()};
            }
        }

        // (6) apply
        for (auto& a : agents) {
            a.position = joint[a.id].position;
            a.level = joint[a.id].level;
            if (aim) {
                a.axis = try_aim_axis(a.position, *aim).value_or(a.axis);
            }
        }

        // (7)-(8) sense and update
        const std::optional<TargetState> visible =
            truth.present() ? std::optional<TargetState>(truth.state()) : std::nullopt;
        rec.agents.resize(n);
        std::vector<FusionMessage> messages;
        messages.reserve(n);
        for (auto& a : agents) {
            const SensingCone cone = sensing.cone(a.position, a.axis);
            const auto scan = generate_measurements(visible, a.position, a.level, cone, sensing, a.rng);
            a.belief = update(predicted[a.id], scan, a.position, a.level, cone, fparams, a.rng);
            messages.push_back(make_fusion_message(a.id, a.belief));

            AgentRecord& ar = rec.agents[a.id];
            ar.position = a.position;
            ar.level = a.level;
            ar.axis = a.axis;
            ar.existence = a.belief.existence;
            if (messages.back().estimate) {
                ar.estimate = TargetState::from_vector(messages.back().estimate->mean);
            }
            ar.n_measurements = scan.size();
        }

        // (9) fusion
        std::vector<double> existences;
        std::vector<GaussianEstimate> estimates;
        for (const auto& m : messages) {
            existences.push_back(m.existence);
            if (m.estimate) {
                estimates.push_back(*m.estimate);
            }
        }
        rec.fused_existence = fuse_existence(existences);
        std::optional<GaussianEstimate> fused;
        if (!estimates.empty()) {
            fused = covariance_intersection(estimates, cfg.fusion.ci);
            rec.fused = TargetState::from_vector(fused->mean);
        }
        for (auto& a : agents) {
            a.belief = inject_fused(a.belief, rec.fused_existence, fused,
                                    cfg.fusion.injection_fraction, a.rng);
        }

        // (10) metrics
        rec.received_w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(n));
        for (const auto& src : agents) {
            const SensingCone cone = sensing.cone(src.position, src.axis);
            if (truth.present()) {
                rec.target_received_w +=
                    received_power(truth.state().position, src.position, src.level, cone, sensing);
            }
            for (const auto& dst : agents) {
                if (dst.id != src.id) {
                    rec.received_w(static_cast<Eigen::Index>(dst.id),
                                   static_cast<Eigen::Index>(src.id)) =
                        received_power(dst.position, src.position, src.level, cone, sensing);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            rec.agents[i].interference_w = rec.received_w.row(static_cast<Eigen::Index>(i)).sum();
        }
        std::vector<Vec3> truth_set;
        std::vector<Vec3> est_set;
        if (truth.present()) {
            truth_set.push_back(truth.state().position);
        }
        if (rec.fused_existence > 0.5 && rec.fused) {
            est_set.push_back(rec.fused->position);
        }
        rec.ospa_m = ospa(truth_set, est_set, cfg.ospa);

        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace trackjam
