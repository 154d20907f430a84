#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trackjam/sim.hpp"

namespace trackjam {

/// Malformed configuration text; the message carries path, line and column.
class ConfigParseError : public std::runtime_error {
public:
    ConfigParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

enum class ExperimentKind { Single, Sweep, Ablation };

struct NamedConfig {
    std::string name;
    ScenarioConfig config;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Single;
    std::size_t n_trials = 1;
    ScenarioConfig base;
    /// Sweep entries after applying their overrides to `base`.
    std::vector<NamedConfig> configurations;
    std::optional<std::filesystem::path> output_dir;
    double spawn_radius = 20.0;

    /// The configurations actually run: "run" for a single run,
    /// "enabled"/"disabled" for an ablation, the sweep entries otherwise. All
    /// share base.master_seed.
    std::vector<NamedConfig> expanded_configurations() const;

    /// Every violated invariant across the spec and its configurations.
    std::vector<std::string> validate() const;
};

/// Parses a scenario (no [experiment] table allowed). Throws ConfigParseError
/// on malformed text and ValidationError listing every unknown key, type
/// mismatch and semantic violation.
ScenarioConfig parse_scenario(std::string_view text, std::string_view source = "<config>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Parses an experiment spec; a file without [experiment] is a single run.
ExperimentSpec parse_experiment(std::string_view text, std::string_view source = "<config>");
ExperimentSpec load_experiment(const std::filesystem::path& path);

std::string_view to_string(ExperimentKind kind);

}  // namespace trackjam
