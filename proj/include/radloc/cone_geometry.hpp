#pragma once

#include "radloc/types.hpp"

namespace radloc::geometry {

/// Unsigned angle between a and b in [0, pi], computed as atan2(|a x b|, a.b)
/// so it stays accurate near 0 and pi. Throws InvalidInput on zero vectors.
double signed_angle(const Vec3& a, const Vec3& b);

/// True when p lies behind the plane through the apex normal to the axis.
bool behind_apex(const Vec3& p, const Cone& cone);

/// Signed surface distance: behind the apex this is |p - o|; in front it is
/// |p - o| * sin(angle(p - o, axis) - half_angle), negative inside the cone.
double signed_distance_to_cone(const Vec3& p, const Cone& cone);

/// Nonnegative distance to the cone surface (absolute value of the above).
double distance_to_cone(const Vec3& p, const Cone& cone);

enum class ProjectionCase { Surface, Apex, OnAxis };

struct ProjectionResult {
  Vec3 point = Vec3::Zero();
  ProjectionCase case_tag = ProjectionCase::Surface;
  double alpha = 0.0;  // angle between (x - o) and the axis
  double beta = 0.0;   // alpha - half_angle
};

/// Orthogonal projection of x onto the cone surface.
///
/// The direction u = (x - o)/|x - o| is rotated towards the axis by
/// beta = alpha - half_angle, giving the generator v through the closest
/// surface point; the foot of the perpendicular is o + v |x - o| cos(beta).
/// Points at or beyond 90 degrees from the axis (and points whose foot would
/// fall behind the apex) project to the apex. Points on the axis are sent to
/// a fixed azimuth derived from the world x axis (world y when parallel).
ProjectionResult project_to_cone(const Vec3& x, const Cone& cone);

/// Unit vector perpendicular to axis used to break the on-axis tie.
Vec3 reference_azimuth(const Vec3& axis);

}  // namespace radloc::geometry
