#include <random>

#include <gtest/gtest.h>

#include "radloc/small_qp.hpp"

namespace radloc::init {
namespace {

TEST(SmallQp, UnconstrainedMinimum) {
  const Eigen::Matrix2d H = Eigen::Matrix2d::Identity();
  const Eigen::Vector2d g(-1.0, -2.0);
  const auto x = solve_small_qp(H, g, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x - Eigen::Vector2d(1.0, 2.0)).norm(), 0.0, 1e-14);
}

TEST(SmallQp, SingleActiveBound) {
  // min 0.5|x|^2 - x1  s.t.  x1 <= 0.25  ->  x = (0.25, 0)
  Eigen::MatrixXd A(1, 2);
  A << -1.0, 0.0;
  const auto x = solve_small_qp(Eigen::Matrix2d::Identity(), Eigen::Vector2d(-1.0, 0.0), A,
                                Eigen::VectorXd::Constant(1, -0.25));
  ASSERT_TRUE(x);
  EXPECT_NEAR((*x - Eigen::Vector2d(0.25, 0.0)).norm(), 0.0, 1e-14);
}

TEST(SmallQp, InfeasibleReturnsNothing) {
  Eigen::MatrixXd A(2, 1);
  A << 1.0, -1.0;
  Eigen::VectorXd c(2);
  c << 1.0, 0.0;  // x >= 1 and x <= 0
  EXPECT_FALSE(solve_small_qp(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), A, c));
}

// Projected-gradient oracle: for a strictly convex QP the optimum is the
// fixed point of x <- P(x - t (Hx + g)); with box constraints P is a clamp.
TEST(SmallQp, MatchesProjectedGradientOnBoxes) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::Matrix3d M;
    for (int i = 0; i < 9; ++i) M(i) = n(rng);
    const Eigen::Matrix3d H = M * M.transpose() + 0.5 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d g(n(rng), n(rng), n(rng));
    const Eigen::Vector3d lo(-0.3, -0.2, -0.5), hi(0.4, 0.1, 0.2);
    Eigen::MatrixXd A(6, 3);
    Eigen::VectorXd c(6);
    for (int k = 0; k < 3; ++k) {
      A.row(2 * k) = Eigen::RowVector3d::Unit(k);
      c(2 * k) = lo(k);
      A.row(2 * k + 1) = -Eigen::RowVector3d::Unit(k);
      c(2 * k + 1) = -hi(k);
    }
    const auto x = solve_small_qp(H, g, A, c);
    ASSERT_TRUE(x);

    const double step = 1.0 / H.eigenvalues().real().maxCoeff();
    Eigen::Vector3d y = Eigen::Vector3d::Zero();
    for (int it = 0; it < 20000; ++it) y = (y - step * (H * y + g)).cwiseMax(lo).cwiseMin(hi);
    EXPECT_LT((*x - y).norm(), 1e-7);
  }
}

}  // namespace
}  // namespace radloc::init
