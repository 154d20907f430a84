#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace trackjam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised when two points that must differ coincide (zero-length direction).
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

/// Range, azimuth and inclination of a point as seen from an observer.
///
/// theta is measured in the xy-plane from +x and lies in (-pi, pi];
/// phi is measured from +z and lies in [0, pi].
struct Spherical {
    double rho = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

/// Circular right cone with its apex at the agent. The base plane sits at
/// axial distance `height` from the apex.
struct SensingCone {
    Vec3 apex = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();  ///< unit vector
    double height = 1.0;         ///< h_a, metres
    double opening_angle = 1.0;  ///< full apex angle, radians

    double base_radius() const;
    bool valid() const;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Spherical coordinates of `target_pos` relative to `agent_pos`.
/// Throws GeometryError("degenerate geometry") when the points coincide.
Spherical measurement_fn(const Vec3& target_pos, const Vec3& agent_pos);

/// Inverse of measurement_fn: the Cartesian offset for a spherical triple.
Vec3 spherical_to_cartesian(const Spherical& s);

bool cone_contains(const SensingCone& cone, const Vec3& point);

/// Unit vector from `agent_pos` toward `aim_point`. Throws GeometryError on
/// coincident inputs.
Vec3 aim_axis(const Vec3& agent_pos, const Vec3& aim_point);

/// Non-throwing variant of aim_axis.
std::optional<Vec3> try_aim_axis(const Vec3& agent_pos, const Vec3& aim_point);

/// Minimal rotation taking local +z onto `axis` (unit). An anti-parallel axis
/// rotates by pi about +x.
Mat3 rotation_onto_axis(const Vec3& axis);

/// `point` expressed in the cone's local frame (apex at origin, axis along +z).
Vec3 to_cone_frame(const SensingCone& cone, const Vec3& point);

}  // namespace trackjam
