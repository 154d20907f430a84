#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackjam/trace.hpp"

namespace trackjam {

class MetricsError : public std::runtime_error {
public:
    explicit MetricsError(const std::string& what) : std::runtime_error(what) {}
};

struct OspaParams {
    double order = 2.0;
    double cutoff = 10.0;
};

/// OSPA distance between two sets holding at most one point each.
double ospa(std::span<const Vec3> truth, std::span<const Vec3> estimate,
            const OspaParams& params = {});

struct JammingEvent {
    int step = 0;
    std::size_t victim = 0;
    std::size_t source = 0;
};

struct JammingReport {
    std::vector<JammingEvent> events;
    /// Distinct (step, source) pairs per victim.
    std::vector<std::size_t> per_agent;

    std::size_t total() const { return events.size(); }
};

/// Records (t, i, j) whenever agent i receives at least `threshold_w` from j.
JammingReport jamming_incidents(const Trace& trace, double threshold_w);

struct PowerSummary {
    double target_received_w = 0.0;    ///< mean over steps
    double agent_interference_w = 0.0;  ///< mean over steps and agents
    double transmit_w = 0.0;            ///< mean over steps and agents
};

/// Throws MetricsError on an empty trace.
PowerSummary power_summary(const Trace& trace);

/// Mean OSPA over steps where the target is present and the team estimate
/// exists; nullopt-like NaN when there are none.
double mean_tracked_ospa(const Trace& trace);

}  // namespace trackjam
