#pragma once

#include <optional>

#include <Eigen/Dense>

namespace radloc::init {

/// Solves   min 0.5 x'Hx + g'x   s.t.  A x >= c
/// for a strictly convex H of dimension at most 3.
///
/// Working sets of size 0..n are enumerated in order and the first one whose
/// equality-constrained minimizer is primal and dual feasible is returned;
/// for a strictly convex problem that KKT point is the unique optimum.
/// Returns nullopt when no working set qualifies (infeasible constraints).
std::optional<Eigen::VectorXd> solve_small_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                              const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                                              double feasibility_tol = 1e-10);

}  // namespace radloc::init
