#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "radloc/cone_geometry.hpp"
#include "radloc/errors.hpp"
#include "radloc/init_solver.hpp"
#include "test_support.hpp"

namespace radloc::init {
namespace {

using radloc::testing::ArcOrigins;
using radloc::testing::ConeThrough;
using radloc::testing::GaussVec;
using radloc::testing::OracleDistance;

std::vector<Cone> ConesThrough(const Vec3& target, const std::vector<Vec3>& origins,
                               std::mt19937_64& rng) {
  std::vector<Cone> cones;
  for (const auto& o : origins) cones.push_back(ConeThrough(o, target, rng));
  return cones;
}

TEST(Residuals, ZeroOnSurfaceAndApexRule) {
  std::mt19937_64 rng(1);
  const Vec3 p(1, 2, 3);
  const auto cones = ConesThrough(p, ArcOrigins(Vec3(0, 0, 8), 10, 20, 5), rng);
  EXPECT_LT(residuals(p, cones).cwiseAbs().maxCoeff(), 1e-12);

  const std::vector<Cone> one{Cone(Vec3::Zero(), Vec3::UnitZ(), 0.5)};
  EXPECT_DOUBLE_EQ(residuals(Vec3(0, 0, -2), one)(0), 2.0);
}

TEST(Residuals, MatchIndependentImplementation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Cone> cones;
    for (int i = 0; i < 5; ++i)
      cones.emplace_back(5.0 * GaussVec(rng), GaussVec(rng), 0.2 + 0.2 * i);
    const Vec3 p = 5.0 * GaussVec(rng);
    const auto r = residuals(p, cones);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(r(i), OracleDistance(p, cones[i]), 1e-9);
    EXPECT_NEAR(cost(p, cones), r.squaredNorm(), 1e-12);
  }
}

TEST(Jacobian, BehindApexPointsAwayFromApex) {
  const std::vector<Cone> one{Cone(Vec3::Zero(), Vec3::UnitZ(), 0.5)};
  const auto J = jacobian(Vec3(0, 0, -2), one);
  EXPECT_NEAR((J.row(0).transpose() - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  int checked = 0;
  while (checked < 500) {
    const Cone c(3.0 * GaussVec(rng), GaussVec(rng), 0.15 + 1.3 * std::uniform_real_distribution<double>()(rng));
    const Vec3 p = c.origin + 5.0 * GaussVec(rng);
    const std::vector<Cone> cones{c};
    const double r = residuals(p, cones)(0);
    const double h = 1e-6;
    // Skip points within a few steps of a kink: the surface, the apex plane
    // and the axis.
    const Vec3 v = p - c.origin;
    if (r < 1e-3 || std::abs(c.axis.dot(v)) < 1e-3 || v.cross(c.axis).norm() < 1e-3) continue;
    const Eigen::RowVector3d analytic = jacobian(p, cones).row(0);
    Eigen::RowVector3d numeric;
    for (int k = 0; k < 3; ++k) {
      const Vec3 e = h * Vec3::Unit(k);
      numeric(k) = (residuals(p + e, cones)(0) - residuals(p - e, cones)(0)) / (2 * h);
    }
    EXPECT_LE((analytic - numeric).norm(), 1e-5 * std::max(1.0, analytic.norm()));
    ++checked;
  }
}

TEST(Jacobian, UnitNormalOnSurface) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 target = 10.0 * GaussVec(rng);
    const Cone c = ConeThrough(Vec3::Zero(), target, rng);
    const std::vector<Cone> cones{c};
    const Vec3 g = jacobian(target, cones).row(0).transpose();
    EXPECT_NEAR(g.norm(), 1.0, 1e-9);
    // Off the surface by 1e-6 m, the gradient of the distance is the unit
    // vector from the nearest surface point.
    const Vec3 off = target + 1e-6 * g;
    const Vec3 foot = geometry::project_to_cone(off, c).point;
    EXPECT_LT((g - (off - foot).normalized()).norm(), 1e-6);
  }
}

TEST(Jacobian, ApexIsPerturbedNotSingular) {
  const std::vector<Cone> one{Cone(Vec3(1, 2, 3), Vec3::UnitZ(), 0.5)};
  const auto J = jacobian(Vec3(1, 2, 3), one);
  EXPECT_TRUE(J.allFinite());
  EXPECT_NEAR(J.row(0).norm(), 1.0, 1e-9);
}

TEST(Solve, RecoversPointFromArc) {
  std::mt19937_64 rng(5);
  const Vec3 target(10, -3, 2);
  InitProblem prob;
  prob.cones = ConesThrough(target, ArcOrigins(Vec3(10, -3, 10), 12, 20, 5), rng);
  const auto sol = solve(prob);
  EXPECT_LT((sol.p - target).norm(), 1e-3);
  EXPECT_LT(sol.cost, 1e-8);
  EXPECT_FALSE(sol.degenerate);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.projected_gradient, prob.tolerance);
}

TEST(Solve, SharedApexIsDegenerate) {
  std::mt19937_64 rng(6);
  const Vec3 target(10, -3, 2);
  InitProblem prob;
  prob.cones = ConesThrough(target, std::vector<Vec3>(5, Vec3(0, 0, 10)), rng);
  const auto sol = solve(prob);
  EXPECT_TRUE(sol.degenerate);
}

TEST(Solve, GroundPlaneModeKeepsZExactlyZero) {
  std::mt19937_64 rng(7);
  const Vec3 target(10, -3, 0);
  InitProblem prob;
  prob.mode = Mode::Mode2D;
  prob.cones = ConesThrough(target, ArcOrigins(Vec3(10, -3, 8), 12, 20, 5), rng);
  const auto sol = solve(prob);
  EXPECT_EQ(sol.p.z(), 0.0);
  EXPECT_LT((sol.p.head<2>() - target.head<2>()).norm(), 1e-3);
}

TEST(Solve, FeasibleAndCertifiedOnNoisyInstances) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 target = 5.0 * GaussVec(rng);
    std::vector<Cone> cones;
    for (const auto& o : ArcOrigins(target + Vec3(0, 0, 6), 10, 15, 5, trial)) {
      Cone c = ConeThrough(o, target, rng);
      c.half_angle += noise(rng);
      cones.push_back(c);
    }
    InitProblem prob;
    prob.cones = cones;
    prob.seed = trial;
    const auto sol = solve(prob);
    EXPECT_GE(constraint_residuals(sol.p, cones).minCoeff(), -1e-6);
    EXPECT_TRUE(sol.converged) << "trial " << trial << " pg " << sol.projected_gradient;
  }
}

TEST(Solve, TranslationEquivariance) {
  std::mt19937_64 rng(9);
  const Vec3 target(3, 4, 1);
  const auto cones = ConesThrough(target, ArcOrigins(Vec3(3, 4, 9), 10, 20, 5), rng);
  const Vec3 shift(17.0, -5.0, 2.5);
  std::vector<Cone> moved = cones;
  for (auto& c : moved) c.origin += shift;
  InitProblem a, b;
  a.cones = cones;
  b.cones = moved;
  const auto sa = solve(a);
  const auto sb = solve(b);
  EXPECT_LT((sb.p - (sa.p + shift)).norm(), 1e-6);
}

TEST(Solve, TieBreakPrefersLowestStart) {
  std::mt19937_64 rng(10);
  const Vec3 target(0, 0, 0);
  InitProblem prob;
  prob.cones = ConesThrough(target, ArcOrigins(Vec3(0, 0, 8), 10, 20, 5), rng);
  prob.multistart_count = 3;
  const auto sol = solve(prob);
  EXPECT_GE(sol.start_index, 0);
  EXPECT_LE(sol.start_index, 3);
  // Same problem, same answer.
  EXPECT_EQ(solve(prob).p, sol.p);
}

TEST(Solve, InfeasibleHalfSpaces) {
  InitProblem prob;
  prob.cones = {Cone(Vec3::Zero(), Vec3::UnitX(), 0.5), Cone(Vec3(-10, 0, 0), -Vec3::UnitX(), 0.5),
                Cone(Vec3(0, 5, 0), Vec3::UnitY(), 0.5)};
  EXPECT_THROW(solve(prob), InfeasibleError);
}

TEST(Solve, RejectsMalformedProblems) {
  InitProblem prob;
  prob.cones = {Cone(Vec3::Zero(), Vec3::UnitX(), 0.5), Cone(Vec3(1, 0, 0), Vec3::UnitX(), 0.5)};
  EXPECT_THROW(solve(prob), InvalidInput);
  prob.cones.push_back(Cone(Vec3(2, 0, 0), Vec3::UnitX(), 0.5));
  prob.multistart_count = 0;
  EXPECT_THROW(solve(prob), InvalidInput);
}

TEST(Solve, FiveConesWithinOneSecond) {
  std::mt19937_64 rng(12);
  InitProblem prob;
  prob.cones = ConesThrough(Vec3(10, -3, 2), ArcOrigins(Vec3(10, -3, 10), 12, 20, 5), rng);
  const auto t0 = std::chrono::steady_clock::now();
  solve(prob);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(s, 1.0);
}

}  // namespace
}  // namespace radloc::init
