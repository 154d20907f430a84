#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trackjam/config.hpp"
#include "trackjam/experiment.hpp"
#include "trackjam/filter.hpp"
#include "trackjam/metrics.hpp"
#include "trackjam/models.hpp"
#include "trackjam/poisson_binomial.hpp"
#include "trackjam/sim.hpp"
#include "trackjam/trace_csv.hpp"

using namespace trackjam;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

std::string csv_of(const Trace& t) {
    std::ostringstream os;
    write_trace_csv(t, os);
    return os.str();
}

fs::path source_dir() { return fs::path(TRACKJAM_SOURCE_DIR); }

/// Probability of exactly m successes by summing over all 2^N outcomes.
double brute_exactly(const std::vector<double>& p, std::size_t m) {
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << p.size()); ++mask) {
        std::size_t ones = 0;
        double prob = 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const bool hit = (mask >> i) & 1;
            ones += hit ? 1 : 0;
            prob *= hit ? p[i] : 1.0 - p[i];
        }
        if (ones == m) {
            total += prob;
        }
    }
    return total;
}

Outcome poisson_binomial_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_diff = 0.0;
    double worst_sum = 0.0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> p(1 + gen() % 12);
        for (double& x : p) {
            x = u(gen);
        }
        double sum = 0.0;
        for (std::size_t m = 0; m <= p.size(); ++m) {
            const double got = xi_exactly_m(p, m);
            worst_diff = std::max(worst_diff, std::abs(got - brute_exactly(p, m)));
            sum += got;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    const double secs = seconds_since(start);
    return {worst_diff < 1e-12 && worst_sum < 1e-12 && secs < 10.0,
            "max |diff| " + fmt(worst_diff) + ", max |sum-1| " + fmt(worst_sum) + ", " +
                fmt(secs, 3) + " s"};
}

Outcome optimizer_oracle() {
    const auto start = Clock::now();
    const ScenarioConfig cfg = load_scenario(source_dir() / "configs" / "oracle_toy.toml");
    ToyProblemParams toy;
    toy.n_agents = cfg.n_agents;
    toy.levels = cfg.power_levels;
    toy.tolerance_w = cfg.tolerance_w();
    toy.sensing = cfg.effective_sensing();
    const OracleCheckResult r = run_oracle_check(toy, 100, 10'000, 100, cfg.master_seed);
    const double secs = seconds_since(start);
    return {r.optimal >= 95 && r.infeasible == 0 && secs < 60.0,
            std::to_string(r.optimal) + "/" + std::to_string(r.instances) + " optimal, " +
                std::to_string(r.infeasible) + " infeasible, max gap " + fmt(r.max_gap) + ", " +
                fmt(secs, 3) + " s"};
}

Outcome filter_fixed_point() {
    FilterParams p;
    p.dynamics.p_birth = 0.02;
    p.dynamics.p_survive = 0.98;
    p.n_particles = 500;
    p.n_birth_particles = 100;
    double worst = 0.0;
    double worst_closed_form = 0.0;
    double recursion_error = 0.0;
    for (double start : {0.0, 0.25, 0.9}) {
        const double contraction = p.dynamics.p_survive - p.dynamics.p_birth;
        worst_closed_form = std::max(worst_closed_form,
                                     std::abs(start - 0.5) * std::pow(contraction, 200));
        Rng rng(3);
        GaussianEstimate prior;
        prior.mean.head<3>() = Vec3(50, 50, 50);
        BernoulliBelief b = make_belief(start, prior, p.n_particles, rng);
        const Vec3 agent(10, 10, 10);
        const SensingCone cone = p.sensing.cone(agent, Vec3::UnitZ());
        for (int t = 0; t < 200; ++t) {
            b = predict(b, p, rng);
            b = update(b, {}, agent, PowerLevel::off(), cone, p, rng);
        }
        worst = std::max(worst, std::abs(b.existence - 0.5));
        recursion_error = std::max(recursion_error,
                                   std::abs(std::abs(b.existence - 0.5) -
                                            std::abs(start - 0.5) * std::pow(contraction, 200)));
    }
    return {worst < 1e-6, "max |e - 0.5| after 200 steps " + fmt(worst) +
                              " (closed form |e0 - 0.5|*(p_s - p_b)^200 gives " +
                              fmt(worst_closed_form) + ", deviation from it " + fmt(recursion_error) +
                              ")"};
}

Outcome detection_models() {
    SensingParams s;
    s.max_level = PowerLevel::dbw(0.5);
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    double continuity = 0.0;
    for (double dbw : {-50.0, -7.0, 0.5}) {
        const PowerLevel l = PowerLevel::dbw(dbw);
        const double below = received_power(Vec3(0, 0, std::nextafter(s.r0, 0.0)), Vec3::Zero(), l, c, s);
        const double at = received_power(Vec3(0, 0, s.r0), Vec3::Zero(), l, c, s);
        const double above = received_power(Vec3(0, 0, std::nextafter(s.r0, 1e9)), Vec3::Zero(), l, c, s);
        continuity = std::max({continuity, std::abs(at - below), std::abs(above - at)});
        const double pd_below = detection_prob(Vec3(0, 0, std::nextafter(s.r0, 0.0)), Vec3::Zero(), l, c, s);
        const double pd_above = detection_prob(Vec3(0, 0, std::nextafter(s.r0, 1e9)), Vec3::Zero(), l, c, s);
        continuity = std::max(continuity, std::abs(pd_above - pd_below));
    }

    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> range(0.05, 40.0);
    std::uniform_real_distribution<double> level(-60.0, 0.5);
    std::size_t violations = 0;
    for (int k = 0; k < 10'000; ++k) {
        double a = range(gen), b = range(gen);
        if (a > b) {
            std::swap(a, b);
        }
        double la = level(gen), lb = level(gen);
        if (la > lb) {
            std::swap(la, lb);
        }
        const PowerLevel l = PowerLevel::dbw(lb);
        const Vec3 near(0, 0, a), far(0, 0, b);
        violations += detection_prob(near, Vec3::Zero(), l, c, s) <
                              detection_prob(far, Vec3::Zero(), l, c, s)
                          ? 1
                          : 0;
        violations += received_power(near, Vec3::Zero(), l, c, s) <
                              received_power(far, Vec3::Zero(), l, c, s)
                          ? 1
                          : 0;
        violations += detection_prob(near, Vec3::Zero(), PowerLevel::dbw(la), c, s) >
                              detection_prob(near, Vec3::Zero(), l, c, s)
                          ? 1
                          : 0;
        violations += received_power(near, Vec3::Zero(), PowerLevel::dbw(la), c, s) >
                              received_power(near, Vec3::Zero(), l, c, s)
                          ? 1
                          : 0;
    }

    const double pd_ref = detection_prob(Vec3(0, 0, 3), Vec3::Zero(), s.max_level, c, s);
    return {continuity < 1e-12 && violations == 0 && pd_ref == 0.95,
            "continuity gap " + fmt(continuity) + ", monotonicity violations " +
                std::to_string(violations) + ", p_D(ref) " + fmt(pd_ref, 17)};
}

Outcome ospa_units() {
    const std::vector<Vec3> none;
    const std::vector<Vec3> one{Vec3(1, 2, 3)};
    bool ok = ospa(none, none) == 0.0 && ospa(one, none) == 10.0 && ospa(none, one) == 10.0;
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dist(0.0, 30.0);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double d = dist(gen);
        const Vec3 a(10 * n(gen), 10 * n(gen), 10 * n(gen));
        const Vec3 b = a + d * Vec3(n(gen), n(gen), n(gen)).normalized();
        const double expected = std::min(10.0, (b - a).norm());
        worst = std::max(worst, std::abs(ospa(std::vector<Vec3>{a}, std::vector<Vec3>{b}) - expected));
    }
    ok = ok && worst < 1e-9;
    return {ok, "empty/mismatch cases exact, singleton max error " + fmt(worst)};
}

Outcome constraint_ablation() {
    const auto start = Clock::now();
    ExperimentSpec spec = load_experiment(source_dir() / "configs" / "ablation.toml");
    const fs::path out = fs::temp_directory_path() /
                         ("trackjam_acceptance_ablation_" + std::to_string(std::random_device{}()));
    const ExperimentResult r = run_experiment(spec, out);
    const double tol = spec.base.tolerance_w();

    std::map<std::string, double> incidents, target;
    std::map<std::string, std::size_t> trials;
    std::size_t enabled_violations = 0;
    std::size_t disabled_exceeding_trials = 0;
    for (const TrialResult& t : r.trials) {
        const Trace trace = read_trace_csv(t.trace_path);
        const std::size_t n = trace.n_agents();
        incidents[t.configuration] +=
            static_cast<double>(jamming_incidents(trace, tol).total()) / static_cast<double>(n);
        target[t.configuration] += power_summary(trace).target_received_w;
        ++trials[t.configuration];
        bool exceeded = false;
        for (const StepRecord& s : trace.steps) {
            double mean = 0.0;
            for (const AgentRecord& a : s.agents) {
                mean += a.interference_w / static_cast<double>(n);
            }
            if (t.configuration == "enabled" && s.planned && !(mean < tol)) {
                ++enabled_violations;
            }
            exceeded = exceeded || mean > tol;
        }
        if (t.configuration == "disabled" && exceeded) {
            ++disabled_exceeding_trials;
        }
    }
    std::error_code ec;
    fs::remove_all(out, ec);

    const double n_en = static_cast<double>(trials["enabled"]);
    const double n_dis = static_cast<double>(trials["disabled"]);
    const double inc_en = incidents["enabled"] / n_en;
    const double inc_dis = incidents["disabled"] / n_dis;
    const double tgt_en = target["enabled"] / n_en;
    const double tgt_dis = target["disabled"] / n_dis;
    const double secs = seconds_since(start);

    const bool a = inc_dis > inc_en;
    const bool b = enabled_violations == 0 && disabled_exceeding_trials >= 15;
    const bool c = tgt_dis >= tgt_en;
    return {a && b && c && secs < 600.0,
            std::string("(a) ") + (a ? "ok" : "no") + " incidents/agent disabled " + fmt(inc_dis) +
                " vs enabled " + fmt(inc_en) + "; (b) " + (b ? "ok" : "no") +
                " enabled violations " + std::to_string(enabled_violations) +
                ", disabled trials exceeding " + std::to_string(disabled_exceeding_trials) + "/" +
                std::to_string(trials["disabled"]) + "; (c) " + (c ? "ok" : "no") +
                " target power disabled " + fmt(tgt_dis) + " W vs enabled " + fmt(tgt_en) +
                " W; " + fmt(secs, 3) + " s"};
}

Outcome fig1_regression() {
    const ScenarioConfig cfg = load_scenario(source_dir() / "configs" / "fig1.toml");
    const Trace first = run_scenario(cfg);
    const std::string bytes = csv_of(first);
    const bool stable = bytes == csv_of(run_scenario(cfg));

    std::ifstream in(source_dir() / "tests" / "fixtures" / "fig1_reference.csv", std::ios::binary);
    std::ostringstream ref;
    ref << in.rdbuf();
    const bool matches_reference = in.good() || in.eof() ? ref.str() == bytes : false;

    auto existence_at = [&](int step) { return first.steps.at(static_cast<std::size_t>(step - 1)).fused_existence; };
    auto any_in = [&](int from, int to, const std::function<bool(double)>& pred) {
        for (int k = from; k <= to; ++k) {
            if (pred(existence_at(k))) {
                return true;
            }
        }
        return false;
    };
    const bool held = existence_at(13) > 0.5;
    const bool dropped = any_in(14, 17, [](double e) { return e < 0.5; });
    const bool recovered = any_in(18, 20, [](double e) { return e > 0.5; });
    const double mean_ospa = mean_tracked_ospa(first);
    const bool accurate = mean_ospa < 5.0;

    std::string e_trace;
    for (int k = 11; k <= 21; ++k) {
        e_trace += (k > 11 ? " " : "") + fmt(existence_at(k), 3);
    }
    return {stable && matches_reference && held && dropped && recovered && accurate,
            std::string("stable ") + (stable ? "yes" : "no") + ", matches reference " +
                (matches_reference ? "yes" : "no") + ", e(13) > 0.5 " + (held ? "yes" : "no") +
                ", e < 0.5 by 17 " + (dropped ? "yes" : "no") + ", e > 0.5 by 20 " +
                (recovered ? "yes" : "no") + ", mean OSPA " + fmt(mean_ospa) + " m; e(11..21) " +
                e_trace};
}

Outcome determinism() {
    std::vector<ScenarioConfig> scenarios;
    scenarios.push_back(load_scenario(source_dir() / "configs" / "fig1.toml"));
    ScenarioConfig stochastic = scenarios.front();
    stochastic.presence.kind = PresenceSchedule::Kind::Stochastic;
    stochastic.master_seed = 99;
    scenarios.push_back(stochastic);
    const ExperimentSpec ablation = load_experiment(source_dir() / "configs" / "ablation.toml");
    for (const NamedConfig& nc : ablation.expanded_configurations()) {
        scenarios.push_back(spawn_trial(nc.config, ablation.base.master_seed + 3, ablation.spawn_radius));
    }
    ScenarioConfig distributed = scenarios.front();
    distributed.solver.distributed = true;
    distributed.n_steps = 10;
    distributed.presence.intervals = {{1, 5}, {8, 10}};
    scenarios.push_back(distributed);

    std::size_t identical = 0;
    for (const ScenarioConfig& cfg : scenarios) {
        identical += csv_of(run_scenario(cfg)) == csv_of(run_scenario(cfg)) ? 1 : 0;
    }
    return {identical == scenarios.size(),
            std::to_string(identical) + "/" + std::to_string(scenarios.size()) +
                " scenarios byte-identical across repeated runs"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"poisson-binomial oracle", poisson_binomial_oracle},
        {"optimizer oracle", optimizer_oracle},
        {"filter existence fixed point", filter_fixed_point},
        {"detection and power models", detection_models},
        {"OSPA unit values", ospa_units},
        {"interference constraint ablation", constraint_ablation},
        {"occlusion scenario regression", fig1_regression},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("CRITERION %zu %s: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
