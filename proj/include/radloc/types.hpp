#pragma once

#include <Eigen/Geometry>

namespace radloc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Frame { Camera, World };

/// Estimation domain: full 3D, or source constrained to the ground plane z = 0.
enum class Mode { Mode3D, Mode2D };

/// Compton cone: the set of incoming directions consistent with one event.
/// The constructor normalizes the axis and rejects invalid angles.
struct Cone {
  Vec3 origin = Vec3::Zero();  // meters
  Vec3 axis = Vec3::UnitZ();   // unit
  double half_angle = 0.0;     // radians, (0, pi)
  Frame frame = Frame::Camera;
  double timestamp = 0.0;      // seconds

  Cone() = default;
  Cone(const Vec3& origin, const Vec3& axis, double half_angle, Frame frame = Frame::World,
       double timestamp = 0.0);
};

/// Rigid body pose in the world frame at a point in time.
struct Pose {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

  Pose() = default;
  Pose(double timestamp, const Vec3& position, const Eigen::Quaterniond& orientation);

  Eigen::Isometry3d transform() const;
};

}  // namespace radloc
