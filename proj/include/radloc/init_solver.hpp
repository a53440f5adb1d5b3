#pragma once

// Initial source position from a batch of cones: the point of least summed
// squared surface distance, restricted to the half-spaces in front of every
// apex and optionally to the ground plane.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "radloc/types.hpp"

namespace radloc::init {

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p, double tol = 0.0) const;
  Vec3 center() const { return 0.5 * (lo + hi); }
};

/// Bounding box of the cone apices inflated by margin_m on every side.
Box default_bounds(std::span<const Cone> cones, double margin_m = 200.0);

struct InitProblem {
  std::vector<Cone> cones;  // world frame
  Mode mode = Mode::Mode3D;
  std::optional<Box> bounds;  // default_bounds(cones) when empty
  int multistart_count = 32;
  double tolerance = 1e-6;  // projected gradient norm of the cost
  int max_iterations = 200;
  double degeneracy_threshold = 1e6;
  /// A minimizer this close to an apex places the source at the sensor; the
  /// residuals are not differentiable there and the solution carries no range.
  double apex_tolerance = 1e-3;
  std::uint64_t seed = 0;
};

struct InitSolution {
  Vec3 p = Vec3::Zero();
  double cost = 0.0;
  double condition = 0.0;  // of J'J at p
  bool degenerate = false;
  int iterations = 0;
  double projected_gradient = 0.0;
  bool converged = false;
  int start_index = 0;
};

/// Per-cone surface distances at p.
Eigen::VectorXd residuals(const Vec3& p, std::span<const Cone> cones);

/// Sum of squared surface distances.
double cost(const Vec3& p, std::span<const Cone> cones);

/// Gradient of each nonnegative residual with respect to p (N x 3). Points at
/// an apex or on an axis are nudged by 1e-9 m in a fixed direction first.
Eigen::MatrixX3d jacobian(const Vec3& p, std::span<const Cone> cones);

/// Half-space residuals d_i'p - d_i'o_i; all nonnegative for a feasible p.
Eigen::VectorXd constraint_residuals(const Vec3& p, std::span<const Cone> cones);

/// Runs the multistart projected Gauss-Newton solve. Throws InvalidInput for a
/// malformed problem and InfeasibleError when no start admits a feasible point.
InitSolution solve(const InitProblem& problem);

}  // namespace radloc::init
