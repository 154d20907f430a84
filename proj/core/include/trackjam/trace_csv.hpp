#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trackjam/trace.hpp"

namespace trackjam {

class CsvError : public std::runtime_error {
public:
    explicit CsvError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);
/// Whole-string parse; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view text);

/// Column names: step, truth_present, truth_x..truth_vz; per agent j the block
/// aj_x, aj_y, aj_z, aj_level_dBW (OFF when off), aj_axis_x..aj_axis_z,
/// aj_existence, aj_est_x..aj_est_vz, aj_interference_W; fused_existence,
/// fused_x..fused_vz, target_received_W, ospa_m; then rx_i_from_j_W for every
/// ordered pair i != j, aj_n_meas per agent and planned.
std::vector<std::string> trace_csv_header(std::size_t n_agents);

void write_trace_csv(const Trace& trace, std::ostream& out);
/// Throws CsvError naming the path when it cannot be written.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace trackjam
