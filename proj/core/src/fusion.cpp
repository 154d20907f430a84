#include "trackjam/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>

namespace trackjam {

FusionMessage make_fusion_message(std::size_t agent_id, const BernoulliBelief& belief) {
    return {agent_id, belief.existence, point_estimate(belief)};
}

double fuse_existence(std::span<const double> existences) {
    if (existences.empty()) {
        throw FusionError("fuse_existence: empty input");
    }
    const double sum = std::accumulate(existences.begin(), existences.end(), 0.0);
    return sum / static_cast<double>(existences.size());
}

namespace {

Mat6 inverse_spd(const Mat6& cov) {
    const Mat6 sym = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Mat6> llt(sym);
    if (llt.info() != Eigen::Success) {
        llt.compute(sym + 1e-9 * Mat6::Identity());
        if (llt.info() != Eigen::Success) {
            throw FusionError("covariance intersection: singular covariance");
        }
    }
    return llt.solve(Mat6::Identity());
}

}  // namespace

GaussianEstimate ci_combine(std::span<const GaussianEstimate> estimates,
                            std::span<const double> weights) {
    if (estimates.empty() || estimates.size() != weights.size()) {
        throw FusionError("ci_combine: estimates and weights must be non-empty and aligned");
    }
    Mat6 info = Mat6::Zero();
    StateVector info_mean = StateVector::Zero();
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        const Mat6 inv = inverse_spd(estimates[j].cov);
        info += weights[j] * inv;
        info_mean += weights[j] * inv * estimates[j].mean;
    }
    const Mat6 cov = inverse_spd(info);
    GaussianEstimate out;
    out.cov = 0.5 * (cov + cov.transpose());
    out.mean = out.cov * info_mean;
    return out;
}

GaussianEstimate ci_pair(const GaussianEstimate& a, const GaussianEstimate& b, double omega) {
    const GaussianEstimate pair[] = {a, b};
    const double w[] = {omega, 1.0 - omega};
    return ci_combine(pair, w);
}

double ci_min_trace_weight(const GaussianEstimate& a, const GaussianEstimate& b) {
    const auto trace_at = [&](double w) { return ci_pair(a, b, w).cov.trace(); };
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0;
    double hi = 1.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = trace_at(x1);
    double f2 = trace_at(x2);
    while (hi - lo > 1e-8) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = trace_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = trace_at(x2);
        }
    }
    // trace(C(w)) is convex but the minimiser may sit on the boundary
    double best = 0.5 * (lo + hi);
    double best_trace = trace_at(best);
    for (double edge : {0.0, 1.0}) {
        const double t = trace_at(edge);
        if (t < best_trace) {
            best = edge;
            best_trace = t;
        }
    }
    return best;
}

GaussianEstimate covariance_intersection(std::span<const GaussianEstimate> estimates,
                                         const CiWeightPolicy& policy) {
    if (estimates.empty()) {
        throw FusionError("covariance_intersection: no estimates");
    }
    GaussianEstimate fused = estimates.front();
    if (estimates.size() == 1) {
        (void)inverse_spd(fused.cov);  // still reject singular input
        return fused;
    }
    for (std::size_t j = 1; j < estimates.size(); ++j) {
        const double omega = policy.kind == CiWeightPolicy::Kind::MinTrace
                                 ? ci_min_trace_weight(fused, estimates[j])
                                 : policy.omega;
        fused = ci_pair(fused, estimates[j], omega);
    }
    return fused;
}

std::size_t injection_count(std::size_t n, double fraction) {
    const double raw = std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n);
    // guard against 0.5 * 1000 landing a hair above 500
    const double rounded = std::round(raw);
    const double k = std::abs(raw - rounded) < 1e-9 ? rounded : std::ceil(raw);
    return std::min(n, static_cast<std::size_t>(k));
}

BernoulliBelief inject_fused(const BernoulliBelief& belief, double fused_existence,
                             const std::optional<GaussianEstimate>& fused, double fraction,
                             Rng& rng) {
    BernoulliBelief out = belief;
    out.existence = fused_existence;
    const std::size_t n = belief.particles.size();
    const std::size_t k = injection_count(n, fraction);
    if (!fused || k == 0) {
        return out;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& w = belief.particles.weights;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return w[static_cast<Eigen::Index>(a)] < w[static_cast<Eigen::Index>(b)];
    });

    double displaced = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        displaced += w[static_cast<Eigen::Index>(order[r])];
    }
    if (displaced <= 0.0) {
        displaced = static_cast<double>(k) / static_cast<double>(n);
    }
    const GaussianSampler sampler(fused->mean, fused->cov);
    for (std::size_t r = 0; r < k; ++r) {
        const auto i = static_cast<Eigen::Index>(order[r]);
        out.particles.states.col(i) = sampler.sample(rng);
        out.particles.weights[i] = displaced / static_cast<double>(k);
    }
    out.particles.normalize();
    return out;
}

}  // namespace trackjam
