#include "trackjam/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace trackjam {

namespace {

using Problems = std::vector<std::string>;

std::string where(const toml::node& node) {
    const auto& src = node.source();
    return "line " + std::to_string(src.begin.line) + ", column " +
           std::to_string(src.begin.column);
}

std::optional<double> as_number(const toml::node& node) {
    if (auto v = node.value<double>()) {
        return *v;
    }
    return std::nullopt;
}

/// Reads typed keys from one table and reports whatever it did not consume.
class Section {
public:
    Section(const toml::table& table, std::string prefix, Problems& problems)
        : table_(table), prefix_(std::move(prefix)), problems_(problems) {}

    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    ~Section() {
        for (const auto& [key, node] : table_) {
            if (!used_.contains(std::string(key.str()))) {
                problems_.push_back(name(key.str()) + ": unknown key (" + where(node) + ")");
            }
        }
    }

    const toml::node* get(std::string_view key) {
        used_.insert(std::string(key));
        return table_.get(key);
    }

    const toml::table* table(std::string_view key) {
        const toml::node* node = get(key);
        if (node == nullptr) {
            return nullptr;
        }
        if (!node->is_table()) {
            fail(key, *node, "expected a table");
            return nullptr;
        }
        return node->as_table();
    }

    void number(std::string_view key, double& out) {
        if (const toml::node* node = get(key)) {
            if (auto v = as_number(*node)) {
                out = *v;
            } else {
                fail(key, *node, "expected a number");
            }
        }
    }

    template <class Int>
    void integer(std::string_view key, Int& out) {
        if (const toml::node* node = get(key)) {
            auto v = node->value<std::int64_t>();
            if (!node->is_integer() || !v) {
                fail(key, *node, "expected an integer");
            } else if (*v < 0) {
                fail(key, *node, "must be >= 0");
            } else {
                out = static_cast<Int>(*v);
            }
        }
    }

    void integer_signed(std::string_view key, int& out) {
        if (const toml::node* node = get(key)) {
            if (!node->is_integer()) {
                fail(key, *node, "expected an integer");
            } else {
                out = static_cast<int>(*node->value<std::int64_t>());
            }
        }
    }

    void boolean(std::string_view key, bool& out) {
        if (const toml::node* node = get(key)) {
            if (auto v = node->value<bool>(); node->is_boolean() && v) {
                out = *v;
            } else {
                fail(key, *node, "expected true or false");
            }
        }
    }

    void string(std::string_view key, std::string& out) {
        if (const toml::node* node = get(key)) {
            if (auto v = node->value<std::string>(); node->is_string() && v) {
                out = *v;
            } else {
                fail(key, *node, "expected a string");
            }
        }
    }

    template <class Enum>
    void choice(std::string_view key, Enum& out,
                std::initializer_list<std::pair<std::string_view, Enum>> options) {
        const toml::node* node = get(key);
        if (node == nullptr) {
            return;
        }
        std::string allowed;
        if (auto v = node->value<std::string>(); node->is_string() && v) {
            for (const auto& [label, value] : options) {
                if (*v == label) {
                    out = value;
                    return;
                }
            }
        }
        for (const auto& [label, value] : options) {
            allowed += (allowed.empty() ? "" : "|") + std::string(label);
        }
        fail(key, *node, "expected one of " + allowed);
    }

    /// Exactly `n` numbers.
    std::optional<std::vector<double>> numbers(std::string_view key, const toml::node& node,
                                               std::size_t n) {
        const toml::array* arr = node.as_array();
        std::vector<double> out;
        if (arr != nullptr && (n == 0 || arr->size() == n)) {
            for (const auto& el : *arr) {
                auto v = as_number(el);
                if (!v) {
                    break;
                }
                out.push_back(*v);
            }
            if (out.size() == arr->size()) {
                return out;
            }
        }
        fail(key, node,
             n == 0 ? "expected an array of numbers"
                    : "expected an array of " + std::to_string(n) + " numbers");
        return std::nullopt;
    }

    void vec3(std::string_view key, Vec3& out) {
        if (const toml::node* node = get(key)) {
            if (auto v = numbers(key, *node, 3)) {
                out = Vec3((*v)[0], (*v)[1], (*v)[2]);
            }
        }
    }

    void number_list(std::string_view key, std::vector<double>& out) {
        if (const toml::node* node = get(key)) {
            if (auto v = numbers(key, *node, 0)) {
                out = *v;
            }
        }
    }

    /// A scalar (times identity), 3 diagonal entries, or a 3x3 nested array.
    void matrix3(std::string_view key, Mat3& out, bool allow_scalar) {
        const toml::node* node = get(key);
        if (node == nullptr) {
            return;
        }
        if (auto s = as_number(*node); s && allow_scalar) {
            out = *s * Mat3::Identity();
            return;
        }
        if (const toml::array* arr = node->as_array(); arr != nullptr && arr->size() == 3) {
            if ((*arr)[0].is_array()) {
                Mat3 m;
                for (int r = 0; r < 3; ++r) {
                    auto row = numbers(key, (*arr)[static_cast<std::size_t>(r)], 3);
                    if (!row) {
                        return;
                    }
                    for (int c = 0; c < 3; ++c) {
                        m(r, c) = (*row)[static_cast<std::size_t>(c)];
                    }
                }
                out = m;
                return;
            }
            if (auto d = numbers(key, *node, 3)) {
                out = Eigen::Vector3d((*d)[0], (*d)[1], (*d)[2]).asDiagonal();
            }
            return;
        }
        fail(key, *node,
             allow_scalar ? "expected a number, 3 diagonal entries or a 3x3 array"
                          : "expected 3 diagonal entries or a 3x3 array");
    }

    void fail(std::string_view key, const toml::node& node, const std::string& what) {
        problems_.push_back(name(key) + ": " + what + " (" + where(node) + ")");
    }

    std::string name(std::string_view key) const {
        return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
    }

    Problems& problems() { return problems_; }

private:
    const toml::table& table_;
    std::string prefix_;
    Problems& problems_;
    std::set<std::string> used_;
};

std::string join(std::string_view a, std::string_view b) {
    return a.empty() ? std::string(b) : std::string(a) + "." + std::string(b);
}

void read_presence(Section& sec, PresenceSchedule& out) {
    const toml::node* node = sec.get("presence");
    if (node == nullptr) {
        return;
    }
    if (auto s = node->value<std::string>(); node->is_string() && s) {
        if (*s == "always") {
            out = {PresenceSchedule::Kind::Always, {}};
            return;
        }
        if (*s == "stochastic") {
            out = {PresenceSchedule::Kind::Stochastic, {}};
            return;
        }
    } else if (const toml::array* arr = node->as_array()) {
        PresenceSchedule sched{PresenceSchedule::Kind::Intervals, {}};
        for (const auto& el : *arr) {
            const toml::array* pair = el.as_array();
            if (pair == nullptr || pair->size() != 2 || !(*pair)[0].is_integer() ||
                !(*pair)[1].is_integer()) {
                sec.fail("presence", el, "intervals must be [first, last] integer pairs");
                return;
            }
            sched.intervals.push_back({static_cast<int>(*(*pair)[0].value<std::int64_t>()),
                                       static_cast<int>(*(*pair)[1].value<std::int64_t>())});
        }
        out = std::move(sched);
        return;
    }
    sec.fail("presence", *node, "expected \"always\", \"stochastic\" or a list of [first, last]");
}

void read_power_levels(Section& sec, std::vector<PowerLevel>& out) {
    const toml::node* node = sec.get("power_levels_dbw");
    if (node == nullptr) {
        return;
    }
    const toml::array* arr = node->as_array();
    if (arr == nullptr) {
        sec.fail("power_levels_dbw", *node, "expected an array of dBW values or \"off\"");
        return;
    }
    std::vector<PowerLevel> levels;
    for (const auto& el : *arr) {
        if (auto s = el.value<std::string>(); el.is_string() && s && (*s == "off" || *s == "OFF")) {
            levels.push_back(PowerLevel::off());
        } else if (auto v = as_number(el)) {
            levels.push_back(PowerLevel::dbw(*v));
        } else {
            sec.fail("power_levels_dbw", el, "entries must be numbers (dBW) or \"off\"");
            return;
        }
    }
    out = std::move(levels);
}

void read_scenario_section(Section& sec, ScenarioConfig& cfg) {
    sec.vec3("box_min", cfg.surveillance_box.lo);
    sec.vec3("box_max", cfg.surveillance_box.hi);
    if (const toml::node* node = sec.get("agent_positions")) {
        const toml::array* arr = node->as_array();
        if (arr == nullptr) {
            sec.fail("agent_positions", *node, "expected an array of [x, y, z]");
        } else {
            std::vector<Vec3> positions;
            for (const auto& el : *arr) {
                auto v = sec.numbers("agent_positions", el, 3);
                if (!v) {
                    break;
                }
                positions.emplace_back((*v)[0], (*v)[1], (*v)[2]);
            }
            if (positions.size() == arr->size()) {
                cfg.agent_initial_positions = std::move(positions);
            }
        }
    }
    if (const toml::node* node = sec.get("target_initial")) {
        if (auto v = sec.numbers("target_initial", *node, 6)) {
            cfg.target_initial.position = Vec3((*v)[0], (*v)[1], (*v)[2]);
            cfg.target_initial.velocity = Vec3((*v)[3], (*v)[4], (*v)[5]);
        }
    }
    if (const toml::node* node = sec.get("initial_aim_point")) {
        if (auto v = sec.numbers("initial_aim_point", *node, 3)) {
            cfg.initial_aim_point = Vec3((*v)[0], (*v)[1], (*v)[2]);
        }
    }
    read_presence(sec, cfg.presence);
    sec.choice("occlusion_motion", cfg.occlusion_motion,
               {{"freeze", OcclusionMotion::Freeze}, {"continue", OcclusionMotion::Continue}});
}

void read_dynamics_section(Section& sec, ScenarioConfig& cfg) {
    sec.number("dt", cfg.dynamics.dt);
    sec.matrix3("accel_noise_cov", cfg.dynamics.accel_noise_cov, true);
    sec.number("p_birth", cfg.dynamics.p_birth);
    sec.number("p_survive", cfg.dynamics.p_survive);
}

void read_sensing_section(Section& sec, ScenarioConfig& cfg) {
    auto& s = cfg.sensing;
    sec.number("p_d_max", s.p_d_max);
    sec.number("r0", s.r0);
    sec.number("path_loss_exp", s.path_loss_exp);
    sec.number("cone_height", s.cone_height);
    double angle_deg = s.cone_angle * 180.0 / std::numbers::pi;
    sec.number("cone_angle_deg", angle_deg);
    s.cone_angle = angle_deg * std::numbers::pi / 180.0;
    sec.matrix3("meas_noise_cov", s.meas_noise_cov, false);
    sec.number("clutter_rate", s.clutter_rate);
    read_power_levels(sec, cfg.power_levels);
    sec.number("interference_tolerance_db", cfg.tolerance_db);
    sec.choice("detection_ratio_domain", s.ratio_domain,
               {{"linear", DetectionRatioDomain::Linear},
                {"normalized_db", DetectionRatioDomain::NormalizedDb}});
    sec.number("normalized_db_floor", s.normalized_db_floor);
}

void read_control_section(Section& sec, ScenarioConfig& cfg) {
    sec.number_list("radial_steps", cfg.grid.radial_steps);
    sec.integer("n_phi", cfg.grid.n_phi);
    sec.integer("n_theta", cfg.grid.n_theta);
    sec.boolean("include_hover", cfg.grid.include_hover);
    sec.integer("samples", cfg.solver.n_samples);
    sec.integer("iterations", cfg.solver.n_iterations);
    sec.integer("n_required", cfg.solver.n_required);
    sec.choice("local_search_neighbors", cfg.solver.neighbors,
               {{"nearest", NeighborMode::Nearest}, {"random", NeighborMode::Random}});
    sec.boolean("distributed", cfg.solver.distributed);
    sec.boolean("interference_constraints", cfg.solver.enforce_interference);
    sec.choice("fallback", cfg.solver.fallback,
               {{"hold_last", PlanningFallback::HoldLast}, {"off", PlanningFallback::Off}});
    sec.integer("oracle_cap", cfg.solver.oracle_cap);
}

void read_filter_section(Section& sec, ScenarioConfig& cfg) {
    sec.integer("n_particles", cfg.filter.n_particles);
    sec.integer("n_birth_particles", cfg.filter.n_birth_particles);
    sec.number("resample_threshold", cfg.filter.resample_threshold);
    sec.number("birth_velocity_std", cfg.filter.birth_velocity_std);
    sec.number("clutter_rate_floor", cfg.filter.clutter_rate_floor);
    sec.choice("initial_belief", cfg.initial_belief.kind,
               {{"cued", InitialBeliefParams::Kind::Cued},
                {"uniform", InitialBeliefParams::Kind::Uniform}});
    sec.number("initial_existence", cfg.initial_belief.existence);
    sec.number("initial_position_std", cfg.initial_belief.position_std);
    sec.number("initial_velocity_std", cfg.initial_belief.velocity_std);
}

void read_fusion_section(Section& sec, ScenarioConfig& cfg) {
    sec.number("injection_fraction", cfg.fusion.injection_fraction);
    if (const toml::node* node = sec.get("ci_weight")) {
        if (auto s = node->value<std::string>(); node->is_string() && s && *s == "min_trace") {
            cfg.fusion.ci = CiWeightPolicy::min_trace();
        } else if (auto v = as_number(*node)) {
            cfg.fusion.ci = CiWeightPolicy::fixed(*v);
        } else {
            sec.fail("ci_weight", *node, "expected \"min_trace\" or a number in [0, 1]");
        }
    }
}

void read_metrics_section(Section& sec, ScenarioConfig& cfg) {
    sec.number("ospa_order", cfg.ospa.order);
    sec.number("ospa_cutoff", cfg.ospa.cutoff);
    if (const toml::node* node = sec.get("incident_threshold_db")) {
        if (auto v = as_number(*node)) {
            cfg.incident_threshold_db = *v;
        } else {
            sec.fail("incident_threshold_db", *node, "expected a number");
        }
    }
}

using SectionReader = void (*)(Section&, ScenarioConfig&);

constexpr std::pair<std::string_view, SectionReader> kSections[] = {
    {"scenario", read_scenario_section}, {"dynamics", read_dynamics_section},
    {"sensing", read_sensing_section},   {"control", read_control_section},
    {"filter", read_filter_section},     {"fusion", read_fusion_section},
    {"metrics", read_metrics_section},
};

/// Applies the scenario keys of `root` onto `cfg`; keys in `skip` are left
/// for the caller.
void apply_scenario(const toml::table& root, std::string_view prefix, ScenarioConfig& cfg,
                    Problems& problems, std::initializer_list<std::string_view> skip,
                    bool allow_seed = true) {
    Section top(root, std::string(prefix), problems);
    for (std::string_view key : skip) {
        top.get(key);
    }
    if (const toml::node* node = allow_seed ? top.get("master_seed") : nullptr) {
        auto v = node->value<std::int64_t>();
        if (!node->is_integer() || !v || *v < 0) {
            top.fail("master_seed", *node, "expected a non-negative integer");
        } else {
            cfg.master_seed = static_cast<std::uint64_t>(*v);
        }
    }
    top.integer_signed("n_steps", cfg.n_steps);
    top.integer("n_agents", cfg.n_agents);
    for (const auto& [name, reader] : kSections) {
        if (const toml::table* t = top.table(name)) {
            Section sec(*t, join(prefix, name), problems);
            reader(sec, cfg);
        }
    }
}

toml::table parse_toml(std::string_view text, std::string_view source) {
    try {
        return toml::parse(text, source);
    } catch (const toml::parse_error& err) {
        const auto& b = err.source().begin;
        std::ostringstream os;
        os << source << ":" << b.line << ":" << b.column << ": " << err.description();
        throw ConfigParseError(os.str(), b.line, b.column);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void prefix_problems(Problems& out, const std::string& label, const Problems& in) {
    for (const auto& p : in) {
        out.push_back(label.empty() ? p : label + ": " + p);
    }
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Single:
            return "single";
        case ExperimentKind::Sweep:
            return "sweep";
        case ExperimentKind::Ablation:
            return "ablation";
    }
    return "single";
}

std::vector<NamedConfig> ExperimentSpec::expanded_configurations() const {
    switch (kind) {
        case ExperimentKind::Single:
            return {{"run", base}};
        case ExperimentKind::Ablation: {
            ScenarioConfig enabled = base;
            enabled.solver.enforce_interference = true;
            ScenarioConfig disabled = base;
            disabled.solver.enforce_interference = false;
            return {{"enabled", std::move(enabled)}, {"disabled", std::move(disabled)}};
        }
        case ExperimentKind::Sweep:
            break;
    }
    std::vector<NamedConfig> out = configurations;
    for (auto& nc : out) {
        nc.config.master_seed = base.master_seed;
    }
    return out;
}

std::vector<std::string> ExperimentSpec::validate() const {
    Problems problems;
    if (n_trials < 1) {
        problems.push_back("experiment.n_trials must be >= 1");
    }
    if (!(spawn_radius > 0.0)) {
        problems.push_back("experiment.spawn_radius must be > 0");
    }
    if (kind == ExperimentKind::Sweep && configurations.empty()) {
        problems.push_back("experiment.configuration: a sweep needs at least one entry");
    }
    prefix_problems(problems, "", base.validate());
    std::set<std::string> names;
    for (const auto& nc : expanded_configurations()) {
        if (!names.insert(nc.name).second) {
            problems.push_back("experiment.configuration: duplicate name '" + nc.name + "'");
        }
        if (nc.name.empty() || nc.name.find_first_of("/\\ ,\"") != std::string::npos) {
            problems.push_back("experiment.configuration: name '" + nc.name +
                               "' must be non-empty without spaces, commas, quotes or slashes");
        }
        if (kind == ExperimentKind::Sweep) {
            prefix_problems(problems, "configuration '" + nc.name + "'", nc.config.validate());
        }
    }
    return problems;
}

ScenarioConfig parse_scenario(std::string_view text, std::string_view source) {
    const toml::table root = parse_toml(text, source);
    ScenarioConfig cfg;
    Problems problems;
    apply_scenario(root, "", cfg, problems, {});
    prefix_problems(problems, "", cfg.validate());
    if (!problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_file(path), path.string());
}

ExperimentSpec parse_experiment(std::string_view text, std::string_view source) {
    const toml::table root = parse_toml(text, source);
    ExperimentSpec spec;
    Problems problems;
    apply_scenario(root, "", spec.base, problems, {"experiment"});

    std::vector<std::pair<std::string, const toml::table*>> overrides;
    if (const toml::node* node = root.get("experiment")) {
        if (!node->is_table()) {
            problems.push_back("experiment: expected a table (" + where(*node) + ")");
        } else {
            Section sec(*node->as_table(), "experiment", problems);
            sec.choice("kind", spec.kind,
                       {{"single", ExperimentKind::Single},
                        {"sweep", ExperimentKind::Sweep},
                        {"ablation", ExperimentKind::Ablation}});
            sec.integer("n_trials", spec.n_trials);
            std::string out;
            sec.string("output_dir", out);
            if (!out.empty()) {
                spec.output_dir = out;
            }
            sec.number("spawn_radius", spec.spawn_radius);
            if (const toml::node* cfgs = sec.get("configuration")) {
                const toml::array* arr = cfgs->as_array();
                if (arr == nullptr || !arr->is_array_of_tables()) {
                    sec.fail("configuration", *cfgs, "expected [[experiment.configuration]] tables");
                } else {
                    for (std::size_t k = 0; k < arr->size(); ++k) {
                        const toml::table& t = *(*arr)[k].as_table();
                        std::string name = "config" + std::to_string(k + 1);
                        if (const toml::node* n = t.get("name")) {
                            if (auto s = n->value<std::string>(); n->is_string() && s) {
                                name = *s;
                            } else {
                                problems.push_back("experiment.configuration.name: expected a string (" +
                                                   where(*n) + ")");
                            }
                        }
                        overrides.emplace_back(name, &t);
                    }
                }
            }
        }
    }

    if (spec.kind != ExperimentKind::Sweep && !overrides.empty()) {
        problems.push_back("experiment.configuration: only sweep experiments take configurations");
    }
    for (const auto& [name, table] : overrides) {
        ScenarioConfig cfg = spec.base;
        apply_scenario(*table, "experiment.configuration." + name, cfg, problems, {"name"}, false);
        spec.configurations.push_back({name, std::move(cfg)});
    }
    prefix_problems(problems, "", spec.validate());
    if (!problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
    return parse_experiment(read_file(path), path.string());
}

}  // namespace trackjam
