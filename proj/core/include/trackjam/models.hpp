#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "trackjam/geometry.hpp"
#include "trackjam/random.hpp"

namespace trackjam {

using StateVector = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Target position (m) and velocity (m/s).
struct TargetState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();

    StateVector vector() const;
    static TargetState from_vector(const StateVector& v);
};

/// Axis-aligned box.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Constant(100.0);

    bool contains(const Vec3& p) const;
    Vec3 clamp(const Vec3& p) const;
    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 sample(Rng& rng) const;
    double volume() const;
};

struct TargetDynamicsParams {
    double dt = 1.0;
    Mat3 accel_noise_cov = 0.5 * Mat3::Identity();  ///< Sigma_v, (m/s^2)^2
    double p_birth = 0.02;
    double p_survive = 0.98;
    Box birth_region;
};

/// Constant-velocity transition matrix for sampling period dt.
Mat6 transition_matrix(double dt);
/// Acceleration-noise gain for sampling period dt.
Eigen::Matrix<double, 6, 3> noise_gain(double dt);

/// One draw of x' = Phi x + Gamma v, v ~ N(0, Sigma_v).
TargetState target_step(const TargetState& x, const TargetDynamicsParams& params, Rng& rng);

/// Spherical mobility grid: radial steps x inclination x azimuth.
struct ControlGrid {
    std::vector<double> radial_steps{1.0, 3.0, 5.0};
    int n_phi = 8;
    int n_theta = 8;
    bool include_hover = true;

    /// Number of distinct positions admissible_controls returns.
    std::size_t size() const;
};

/// All positions reachable from `u` in one step. Pole directions are emitted
/// once per radial step; the hover position (u itself) is appended last when
/// enabled.
std::vector<Vec3> admissible_controls(const Vec3& u, const ControlGrid& grid);

double db_to_linear(double db);
/// 10 log10(w); returns -infinity for w == 0.
double linear_to_db(double watts);

/// Transmit power level: off, or a level in dBW.
class PowerLevel {
public:
    static PowerLevel off() { return PowerLevel(); }
    static PowerLevel dbw(double level) { return PowerLevel(level); }

    bool is_off() const { return !dbw_.has_value(); }
    /// Level in dBW; only valid when !is_off().
    double dbw_value() const { return *dbw_; }
    double watts() const { return dbw_ ? db_to_linear(*dbw_) : 0.0; }

    friend bool operator==(const PowerLevel&, const PowerLevel&) = default;

private:
    PowerLevel() = default;
    explicit PowerLevel(double level) : dbw_(level) {}
    std::optional<double> dbw_;
};

enum class DetectionRatioDomain {
    Linear,        ///< l / l_max in watts
    NormalizedDb,  ///< (l_dB - floor) / (l_max_dB - floor), clamped to [0, 1]
};

struct SensingParams {
    double p_d_max = 0.95;
    double r0 = 6.0;
    double path_loss_exp = 2.0;
    double cone_height = 40.0;
    double cone_angle = 80.0 * 3.14159265358979323846 / 180.0;
    Mat3 meas_noise_cov = Eigen::Vector3d(0.8, 3.14159265358979323846 / 50.0,
                                          3.14159265358979323846 / 50.0)
                              .asDiagonal();
    double clutter_rate = 3.0;
    PowerLevel max_level = PowerLevel::dbw(0.5);
    DetectionRatioDomain ratio_domain = DetectionRatioDomain::Linear;
    double normalized_db_floor = -60.0;

    /// Largest slant range inside the cone: h_a / cos(theta_a / 2).
    double max_range() const;
    /// Uniform clutter density over [0, rho_max] x (-pi, pi] x [0, pi].
    double clutter_density() const;
    /// Cone of this sensor at `apex` looking along `axis`.
    SensingCone cone(const Vec3& apex, const Vec3& axis) const;
};

/// Path-loss gain in [0, 1]: 0 outside the cone, 1 inside R_0, (R_0/eta)^n_e
/// beyond it.
double path_gain(const Vec3& point, const SensingCone& cone, const SensingParams& s);

/// Transmit-level factor l / l_max in the configured domain.
double level_ratio(const PowerLevel& level, const SensingParams& s);

double detection_prob(const Vec3& target, const Vec3& agent, const PowerLevel& level,
                      const SensingCone& cone, const SensingParams& s);

/// Power in watts received at `point` from an agent transmitting at `level`.
double received_power(const Vec3& point, const Vec3& agent, const PowerLevel& level,
                      const SensingCone& cone, const SensingParams& s);

struct Measurement {
    double rho = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

/// Noise-free measurement h(x, u).
Measurement measure(const Vec3& target, const Vec3& agent);

/// Folds a noisy (rho, theta, phi) back into rho >= 0, theta in (-pi, pi],
/// phi in [0, pi].
Measurement normalize_measurement(double rho, double theta, double phi);

/// One scan: at most one target return plus Poisson clutter, in random order.
std::vector<Measurement> generate_measurements(const std::optional<TargetState>& target,
                                               const Vec3& agent, const PowerLevel& level,
                                               const SensingCone& cone, const SensingParams& s,
                                               Rng& rng);

}  // namespace trackjam
