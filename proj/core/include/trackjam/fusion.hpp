#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "trackjam/filter.hpp"

namespace trackjam {

class FusionError : public std::runtime_error {
public:
    explicit FusionError(const std::string& what) : std::runtime_error(what) {}
};

/// What each agent shares after its local update.
struct FusionMessage {
    std::size_t agent_id = 0;
    double existence = 0.0;
    std::optional<GaussianEstimate> estimate;  ///< present iff existence > 0.5
};

FusionMessage make_fusion_message(std::size_t agent_id, const BernoulliBelief& belief);

/// Arithmetic mean. Throws FusionError on an empty list.
double fuse_existence(std::span<const double> existences);

/// Weight selection for covariance intersection.
struct CiWeightPolicy {
    enum class Kind { MinTrace, Fixed };
    Kind kind = Kind::MinTrace;
    double omega = 0.5;  ///< used by Kind::Fixed (weight of the first operand)

    static CiWeightPolicy min_trace() { return {}; }
    static CiWeightPolicy fixed(double w) { return {Kind::Fixed, w}; }
};

/// Combines estimates with the given simplex weights:
/// C^-1 = sum w_j C_j^-1,  C^-1 x = sum w_j C_j^-1 x_j.
GaussianEstimate ci_combine(std::span<const GaussianEstimate> estimates,
                            std::span<const double> weights);

/// Covariance intersection of two estimates; omega weights `a`.
GaussianEstimate ci_pair(const GaussianEstimate& a, const GaussianEstimate& b, double omega);

/// Weight of `a` minimising trace(C) (golden-section search on [0, 1]).
double ci_min_trace_weight(const GaussianEstimate& a, const GaussianEstimate& b);

/// Fuses estimates in the given order by sequential pairwise CI.
GaussianEstimate covariance_intersection(std::span<const GaussianEstimate> estimates,
                                         const CiWeightPolicy& policy = {});

/// Overwrites existence and, when a fused estimate is given, replaces the
/// ceil(fraction * n) lowest-weight particles with draws from it. The replaced
/// particles share the weight mass they displaced.
BernoulliBelief inject_fused(const BernoulliBelief& belief, double fused_existence,
                             const std::optional<GaussianEstimate>& fused, double fraction,
                             Rng& rng);

/// Number of particles inject_fused replaces.
std::size_t injection_count(std::size_t n, double fraction);

}  // namespace trackjam
