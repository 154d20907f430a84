#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "trackjam/models.hpp"

namespace trackjam {

/// Weighted particle cloud over the 6-D target state (structure of arrays).
struct ParticleSet {
    Eigen::Matrix<double, 6, Eigen::Dynamic> states;
    Eigen::VectorXd weights;

    std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
    bool empty() const { return weights.size() == 0; }
    /// Scales weights to sum to one. No-op on an empty set or zero total.
    void normalize();
    double effective_sample_size() const;
};

/// Existence probability plus the particle approximation of the spatial
/// density conditioned on existence.
struct BernoulliBelief {
    double existence = 0.0;
    ParticleSet particles;
};

/// Mean and covariance of a target state estimate.
struct GaussianEstimate {
    StateVector mean = StateVector::Zero();
    Mat6 cov = Mat6::Identity();
};

struct FilterParams {
    std::size_t n_particles = 5000;
    std::size_t n_birth_particles = 1000;
    double resample_threshold = 0.5;
    double birth_velocity_std = 1.0;
    double clutter_rate_floor = 1e-6;
    TargetDynamicsParams dynamics;
    SensingParams sensing;
    Box surveillance_box;
};

/// Bernoulli prediction: survival/birth mixing of existence and density.
BernoulliBelief predict(const BernoulliBelief& belief, const FilterParams& params, Rng& rng);

/// Intermediate quantities of one update, exposed for diagnostics and tests.
struct UpdateTerms {
    double detection_mass = 0.0;  ///< sum_i w_i p_D(x_i)
    double q = 0.0;               ///< clamped q_t
};

/// Bernoulli measurement update for a sensor at `agent` with the given level
/// and cone. Resamples (systematic) back to n_particles when the set is
/// larger than that or the effective sample size drops below the threshold.
BernoulliBelief update(const BernoulliBelief& predicted, std::span<const Measurement> scan,
                       const Vec3& agent, const PowerLevel& level, const SensingCone& cone,
                       const FilterParams& params, Rng& rng, UpdateTerms* terms = nullptr);

/// Measurement likelihood g(y | x, u) with the azimuth residual wrapped.
double measurement_likelihood(const Measurement& y, const Vec3& target, const Vec3& agent,
                              const Mat3& noise_cov);

/// Weighted mean and covariance; nullopt unless existence > 0.5.
std::optional<GaussianEstimate> point_estimate(const BernoulliBelief& belief);

/// Weighted particle mean regardless of existence; nullopt for an empty set.
std::optional<StateVector> particle_mean(const ParticleSet& particles);

/// Systematic resampling to `n_out` equally weighted particles.
ParticleSet resample_systematic(const ParticleSet& particles, std::size_t n_out, Rng& rng);

/// Indices chosen by systematic resampling (exposed for counting tests).
std::vector<std::size_t> systematic_indices(const Eigen::VectorXd& weights, std::size_t n_out,
                                            double offset);

/// Belief with existence `existence` and particles drawn from `prior`.
BernoulliBelief make_belief(double existence, const GaussianEstimate& prior, std::size_t n,
                            Rng& rng);

/// Belief with existence `existence` and particles uniform over `box`.
BernoulliBelief make_uniform_belief(double existence, const Box& box, double velocity_std,
                                    std::size_t n, Rng& rng);

}  // namespace trackjam
