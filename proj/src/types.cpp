#include "radloc/types.hpp"

#include <cmath>
#include <numbers>

#include "radloc/errors.hpp"

namespace radloc {

Cone::Cone(const Vec3& origin_in, const Vec3& axis_in, double half_angle_in, Frame frame_in,
           double timestamp_in)
    : origin(origin_in), half_angle(half_angle_in), frame(frame_in), timestamp(timestamp_in) {
  const double n = axis_in.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("cone axis must be a nonzero finite vector");
  if (!(half_angle_in > 0.0 && half_angle_in < std::numbers::pi))
    throw InvalidInput("cone half-angle must lie in (0, pi)");
  if (!origin_in.allFinite()) throw InvalidInput("cone origin must be finite");
  axis = axis_in / n;
}

Pose::Pose(double timestamp_in, const Vec3& position_in, const Eigen::Quaterniond& orientation_in)
    : timestamp(timestamp_in), position(position_in), orientation(orientation_in) {
  const double n = orientation_in.norm();
  if (!(std::abs(n - 1.0) < 1e-6)) throw InvalidInput("pose orientation must be a unit quaternion");
  orientation.normalize();
}

Eigen::Isometry3d Pose::transform() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = orientation.toRotationMatrix();
  t.translation() = position;
  return t;
}

}  // namespace radloc
