#include "trackjam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trackjam {

double ospa(std::span<const Vec3> truth, std::span<const Vec3> estimate,
            const OspaParams& params) {
    if (truth.size() > 1 || estimate.size() > 1) {
        throw MetricsError("ospa: single-target sets hold at most one point");
    }
    if (truth.empty() && estimate.empty()) {
        return 0.0;
    }
    if (truth.size() != estimate.size()) {
        return params.cutoff;
    }
    // one-to-one: (min(c, d)^p / 1)^(1/p)
    return std::min(params.cutoff, (truth.front() - estimate.front()).norm());
}

JammingReport jamming_incidents(const Trace& trace, double threshold_w) {
    JammingReport report;
    const std::size_t n = trace.n_agents();
    report.per_agent.assign(n, 0);
    for (const StepRecord& rec : trace.steps) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && rec.received_w(static_cast<Eigen::Index>(i),
                                             static_cast<Eigen::Index>(j)) >= threshold_w) {
                    report.events.push_back({rec.step, i, j});
                    ++report.per_agent[i];
                }
            }
        }
    }
    return report;
}

PowerSummary power_summary(const Trace& trace) {
    if (trace.steps.empty()) {
        throw MetricsError("power_summary: empty trace");
    }
    PowerSummary out;
    double agent_samples = 0.0;
    for (const StepRecord& rec : trace.steps) {
        out.target_received_w += rec.target_received_w;
        for (const AgentRecord& a : rec.agents) {
            out.agent_interference_w += a.interference_w;
            out.transmit_w += a.level.watts();
            agent_samples += 1.0;
        }
    }
    out.target_received_w /= static_cast<double>(trace.steps.size());
    if (agent_samples > 0.0) {
        out.agent_interference_w /= agent_samples;
        out.transmit_w /= agent_samples;
    }
    return out;
}

double mean_tracked_ospa(const Trace& trace) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const StepRecord& rec : trace.steps) {
        if (rec.truth_present && rec.fused_existence > 0.5 && rec.fused) {
            sum += rec.ospa_m;
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : sum / static_cast<double>(count);
}

}  // namespace trackjam
