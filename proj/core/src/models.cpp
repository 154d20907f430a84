#include "trackjam/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace trackjam {

StateVector TargetState::vector() const {
    StateVector v;
    v << position, velocity;
    return v;
}

TargetState TargetState::from_vector(const StateVector& v) {
    return {v.head<3>(), v.tail<3>()};
}

bool Box::contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

Vec3 Box::clamp(const Vec3& p) const {
    return p.cwiseMax(lo).cwiseMin(hi);
}

Vec3 Box::sample(Rng& rng) const {
    Vec3 p;
    for (int i = 0; i < 3; ++i) {
        p[i] = rng.uniform(lo[i], hi[i]);
    }
    return p;
}

double Box::volume() const {
    return (hi - lo).prod();
}

Mat6 transition_matrix(double dt) {
    Mat6 phi = Mat6::Identity();
    phi.topRightCorner<3, 3>() = dt * Mat3::Identity();
    return phi;
}

Eigen::Matrix<double, 6, 3> noise_gain(double dt) {
    Eigen::Matrix<double, 6, 3> gamma;
    gamma.topRows<3>() = 0.5 * dt * dt * Mat3::Identity();
    gamma.bottomRows<3>() = dt * Mat3::Identity();
    return gamma;
}

TargetState target_step(const TargetState& x, const TargetDynamicsParams& params, Rng& rng) {
    const GaussianSampler accel(Eigen::Vector3d::Zero(), params.accel_noise_cov);
    const Eigen::Vector3d nu = accel.sample(rng);
    const StateVector next =
        transition_matrix(params.dt) * x.vector() + noise_gain(params.dt) * nu;
    return TargetState::from_vector(next);
}

std::size_t ControlGrid::size() const {
    const auto per_radius = static_cast<std::size_t>((n_phi - 1) * n_theta + 2);
    return radial_steps.size() * per_radius + (include_hover ? 1 : 0);
}

std::vector<Vec3> admissible_controls(const Vec3& u, const ControlGrid& grid) {
    const double d_phi = std::numbers::pi / grid.n_phi;
    const double d_theta = 2.0 * std::numbers::pi / grid.n_theta;
    std::vector<Vec3> out;
    out.reserve(grid.size());
    for (double radius : grid.radial_steps) {
        for (int l2 = 0; l2 <= grid.n_phi; ++l2) {
            const bool pole = (l2 == 0 || l2 == grid.n_phi);
            for (int l3 = 1; l3 <= grid.n_theta; ++l3) {
                if (pole && l3 > 1) {
                    break;
                }
                const double phi = l2 * d_phi;
                const double theta = l3 * d_theta;
                // exact zeros at the poles keep the two pole points distinct
                const double s = pole ? 0.0 : std::sin(phi);
                const double c = l2 == 0 ? 1.0 : (l2 == grid.n_phi ? -1.0 : std::cos(phi));
                out.emplace_back(u + radius * Vec3(s * std::cos(theta), s * std::sin(theta), c));
            }
        }
    }
    if (grid.include_hover) {
        out.push_back(u);
    }
    return out;
}

double db_to_linear(double db) {
    return std::pow(10.0, db / 10.0);
}

double linear_to_db(double watts) {
    if (watts == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(watts);
}

double SensingParams::max_range() const {
    return cone_height / std::cos(cone_angle / 2.0);
}

double SensingParams::clutter_density() const {
    return 1.0 / (max_range() * 2.0 * std::numbers::pi * std::numbers::pi);
}

SensingCone SensingParams::cone(const Vec3& apex, const Vec3& axis) const {
    return SensingCone{apex, axis, cone_height, cone_angle};
}

double path_gain(const Vec3& point, const SensingCone& cone, const SensingParams& s) {
    if (!cone_contains(cone, point)) {
        return 0.0;
    }
    const double eta = (point - cone.apex).norm();
    if (eta < s.r0) {
        return 1.0;
    }
    return std::pow(s.r0 / eta, s.path_loss_exp);
}

double level_ratio(const PowerLevel& level, const SensingParams& s) {
    if (level.is_off() || s.max_level.is_off()) {
        return 0.0;
    }
    if (s.ratio_domain == DetectionRatioDomain::NormalizedDb) {
        const double span = s.max_level.dbw_value() - s.normalized_db_floor;
        return std::clamp((level.dbw_value() - s.normalized_db_floor) / span, 0.0, 1.0);
    }
    return level.watts() / s.max_level.watts();
}

double detection_prob(const Vec3& target, const Vec3& agent, const PowerLevel& level,
                      const SensingCone& cone, const SensingParams& s) {
    (void)agent;  // the cone apex is the agent position
    const double ratio = level_ratio(level, s);
    if (ratio == 0.0) {
        return 0.0;
    }
    const double p = ratio * s.p_d_max * path_gain(target, cone, s);
    return std::clamp(p, 0.0, s.p_d_max);
}

double received_power(const Vec3& point, const Vec3& agent, const PowerLevel& level,
                      const SensingCone& cone, const SensingParams& s) {
    (void)agent;
    if (level.is_off()) {
        return 0.0;
    }
    return level.watts() * path_gain(point, cone, s);
}

Measurement measure(const Vec3& target, const Vec3& agent) {
    const Spherical sph = measurement_fn(target, agent);
    return {sph.rho, sph.theta, sph.phi};
}

Measurement normalize_measurement(double rho, double theta, double phi) {
    constexpr double pi = std::numbers::pi;
    // fold inclination into [0, pi]; crossing a pole flips the azimuth
    phi = std::remainder(phi, 2.0 * pi);  // [-pi, pi]
    if (phi < 0.0) {
        phi = -phi;
        theta += pi;
    }
    return {std::max(rho, 0.0), wrap_angle(theta), phi};
}

std::vector<Measurement> generate_measurements(const std::optional<TargetState>& target,
                                               const Vec3& agent, const PowerLevel& level,
                                               const SensingCone& cone, const SensingParams& s,
                                               Rng& rng) {
    std::vector<Measurement> out;
    if (target) {
        const double pd = detection_prob(target->position, agent, level, cone, s);
        if (pd > 0.0 && rng.bernoulli(pd) && target->position != agent) {
            const Measurement clean = measure(target->position, agent);
            const GaussianSampler noise(Eigen::Vector3d::Zero(), s.meas_noise_cov);
            const Eigen::VectorXd w = noise.sample(rng);
            out.push_back(
                normalize_measurement(clean.rho + w[0], clean.theta + w[1], clean.phi + w[2]));
        }
    }
    const unsigned n_clutter = rng.poisson(s.clutter_rate);
    const double rho_max = s.max_range();
    for (unsigned k = 0; k < n_clutter; ++k) {
        Measurement c;
        c.rho = rng.uniform(0.0, rho_max);
        c.theta = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
        c.phi = rng.uniform(0.0, std::numbers::pi);
        out.push_back(c);
    }
    std::shuffle(out.begin(), out.end(), rng.engine());
    return out;
}

}  // namespace trackjam
