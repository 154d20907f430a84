#include "trackjam/geometry.hpp"

#include <cmath>
#include <numbers>

namespace trackjam {

double SensingCone::base_radius() const {
    return std::tan(opening_angle / 2.0) * height;
}

bool SensingCone::valid() const {
    return apex.allFinite() && axis.allFinite() && std::abs(axis.norm() - 1.0) <= 1e-9 &&
           height > 0.0 && opening_angle > 0.0 && opening_angle < std::numbers::pi;
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::remainder(angle, two_pi);  // [-pi, pi]
    if (wrapped <= -std::numbers::pi) {
        wrapped += two_pi;
    }
    return wrapped;
}

Spherical measurement_fn(const Vec3& target_pos, const Vec3& agent_pos) {
    const Vec3 delta = target_pos - agent_pos;
    const double rho = delta.norm();
    if (rho == 0.0) {
        throw GeometryError("degenerate geometry");
    }
    const double horizontal = std::hypot(delta.x(), delta.y());
    Spherical out;
    out.rho = rho;
    out.theta = wrap_angle(std::atan2(delta.y(), delta.x()));
    out.phi = std::atan2(horizontal, delta.z());
    return out;
}

Vec3 spherical_to_cartesian(const Spherical& s) {
    const double sin_phi = std::sin(s.phi);
    return {s.rho * sin_phi * std::cos(s.theta), s.rho * sin_phi * std::sin(s.theta),
            s.rho * std::cos(s.phi)};
}

bool cone_contains(const SensingCone& cone, const Vec3& point) {
    const Vec3 d = point - cone.apex;
    const double axial = d.dot(cone.axis);
    if (axial < 0.0 || axial > cone.height) {
        return false;
    }
    // angle(d, axis) <= opening/2  <=>  axial >= |d| cos(opening/2)
    return axial >= d.norm() * std::cos(cone.opening_angle / 2.0);
}

std::optional<Vec3> try_aim_axis(const Vec3& agent_pos, const Vec3& aim_point) {
    const Vec3 d = aim_point - agent_pos;
    const double n = d.norm();
    if (n == 0.0 || !std::isfinite(n)) {
        return std::nullopt;
    }
    return Vec3(d / n);
}

Vec3 aim_axis(const Vec3& agent_pos, const Vec3& aim_point) {
    auto axis = try_aim_axis(agent_pos, aim_point);
    if (!axis) {
        throw GeometryError("degenerate geometry");
    }
    return *axis;
}

Mat3 rotation_onto_axis(const Vec3& axis) {
    const Vec3 z = Vec3::UnitZ();
    if (axis.dot(z) < -1.0 + 1e-15) {
        return Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()).toRotationMatrix();
    }
    return Eigen::Quaterniond::FromTwoVectors(z, axis).toRotationMatrix();
}

Vec3 to_cone_frame(const SensingCone& cone, const Vec3& point) {
    return rotation_onto_axis(cone.axis).transpose() * (point - cone.apex);
}

}  // namespace trackjam
