#include "radloc/cone_geometry.hpp"

#include <cmath>
#include <numbers>

#include "radloc/errors.hpp"

namespace radloc::geometry {

namespace {
constexpr double kOnAxisTolerance = 1e-12;
}

double signed_angle(const Vec3& a, const Vec3& b) {
  if (a.squaredNorm() == 0.0 || b.squaredNorm() == 0.0)
    throw InvalidInput("angle undefined for a zero-length vector");
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool behind_apex(const Vec3& p, const Cone& cone) {
  return cone.axis.dot(p) < cone.axis.dot(cone.origin);
}

double signed_distance_to_cone(const Vec3& p, const Cone& cone) {
  const Vec3 v = p - cone.origin;
  if (behind_apex(p, cone)) return v.norm();
  const double r = v.norm();
  if (r == 0.0) return 0.0;
  return r * std::sin(signed_angle(v, cone.axis) - cone.half_angle);
}

double distance_to_cone(const Vec3& p, const Cone& cone) {
  return std::abs(signed_distance_to_cone(p, cone));
}

Vec3 reference_azimuth(const Vec3& axis) {
  Vec3 w = Vec3::UnitX() - axis.dot(Vec3::UnitX()) * axis;
  if (w.norm() < 1e-6) w = Vec3::UnitY() - axis.dot(Vec3::UnitY()) * axis;
  return w.normalized();
}

ProjectionResult project_to_cone(const Vec3& x, const Cone& cone) {
  ProjectionResult out;
  const Vec3 v = x - cone.origin;
  const double r = v.norm();
  if (r == 0.0) {
    out.point = cone.origin;
    out.case_tag = ProjectionCase::OnAxis;
    out.beta = -cone.half_angle;
    return out;
  }
  const Vec3 u = v / r;
  out.alpha = signed_angle(u, cone.axis);
  out.beta = out.alpha - cone.half_angle;

  if (out.alpha >= std::numbers::pi / 2) {
    out.point = cone.origin;
    out.case_tag = ProjectionCase::Apex;
    return out;
  }

  // Rotating u by beta about u x d keeps it in span(u, d) at angle
  // half_angle from the axis; build that generator directly from the unit
  // in-plane direction so it lies exactly on the surface.
  Vec3 azimuth;
  if (u.cross(cone.axis).norm() < kOnAxisTolerance) {
    out.case_tag = ProjectionCase::OnAxis;
    azimuth = reference_azimuth(cone.axis);
  } else {
    azimuth = u - u.dot(cone.axis) * cone.axis;
    azimuth -= azimuth.dot(cone.axis) * cone.axis;
    azimuth.normalize();
  }
  const Vec3 generator =
      std::cos(cone.half_angle) * cone.axis + std::sin(cone.half_angle) * azimuth;

  const double foot = r * std::cos(out.beta);
  if (foot <= 0.0) {
    // Wide cone, point deep inside: the foot on the generator line falls
    // behind the apex, so the closest point of the half-line is the apex.
    out.point = cone.origin;
    out.case_tag = ProjectionCase::Apex;
    return out;
  }
  out.point = cone.origin + generator * foot;
  return out;
}

}  // namespace radloc::geometry
