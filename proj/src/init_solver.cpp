#include "radloc/init_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "radloc/cone_geometry.hpp"
#include "radloc/errors.hpp"
#include "radloc/log.hpp"
#include "radloc/small_qp.hpp"

namespace radloc::init {

namespace {

constexpr double kNudge = 1e-9;

struct ResidualGradient {
  double value = 0.0;  // signed: negative inside the cone
  Vec3 gradient = Vec3::Zero();
  bool behind = false;
};

// Signed residual and its gradient. The signed form is smooth across the
// surface, which the Gauss-Newton model needs; its square equals the squared
// distance.
ResidualGradient SignedResidual(const Vec3& p_in, const Cone& cone) {
  Vec3 p = p_in;
  Vec3 v = p - cone.origin;
  if (v.norm() < 1e-12) {
    p += kNudge * geometry::reference_azimuth(cone.axis);
    v = p - cone.origin;
  }
  ResidualGradient out;
  if (geometry::behind_apex(p, cone)) {
    out.behind = true;
    out.value = v.norm();
    out.gradient = v / out.value;
    return out;
  }
  Vec3 perp = v - v.dot(cone.axis) * cone.axis;
  if (perp.norm() < 1e-12 * v.norm()) {
    p += kNudge * geometry::reference_azimuth(cone.axis);
    v = p - cone.origin;
    perp = v - v.dot(cone.axis) * cone.axis;
  }
  perp -= perp.dot(cone.axis) * cone.axis;
  const double r = v.norm();
  const double alpha = std::atan2(perp.norm(), v.dot(cone.axis));
  const Vec3 w = perp.normalized();
  const Vec3 e_alpha = std::cos(alpha) * w - std::sin(alpha) * cone.axis;
  const double s = std::sin(alpha - cone.half_angle);
  const double co = std::cos(alpha - cone.half_angle);
  out.value = r * s;
  out.gradient = s * (v / r) + co * e_alpha;
  return out;
}

struct Model {
  const std::vector<Cone>& cones;
  int n;  // 3, or 2 with z eliminated
  Eigen::MatrixXd A;
  Eigen::VectorXd c;

  Vec3 Lift(const Eigen::VectorXd& q) const {
    return n == 3 ? Vec3(q(0), q(1), q(2)) : Vec3(q(0), q(1), 0.0);
  }

  void Evaluate(const Eigen::VectorXd& q, Eigen::VectorXd& rho, Eigen::MatrixXd& J) const {
    const Vec3 p = Lift(q);
    rho.resize(static_cast<Eigen::Index>(cones.size()));
    J.resize(static_cast<Eigen::Index>(cones.size()), n);
    for (std::size_t i = 0; i < cones.size(); ++i) {
      const auto rg = SignedResidual(p, cones[i]);
      rho(i) = rg.value;
      J.row(i) = rg.gradient.head(n).transpose();
    }
  }

  double Cost(const Eigen::VectorXd& q) const {
    double total = 0.0;
    const Vec3 p = Lift(q);
    for (const auto& cone : cones) {
      const double d = geometry::distance_to_cone(p, cone);
      total += d * d;
    }
    return total;
  }

  // Norm of the cost gradient projected onto the tangent cone of the active
  // constraints; zero exactly at a KKT point.
  double ProjectedGradient(const Eigen::VectorXd& q, const Eigen::VectorXd& grad) const {
    std::vector<int> active;
    for (int j = 0; j < A.rows(); ++j) {
      const double slack = A.row(j).dot(q) - c(j);
      if (slack <= 1e-9 * (1.0 + std::abs(c(j)))) active.push_back(j);
    }
    if (active.empty()) return grad.norm();
    Eigen::MatrixXd Aa(active.size(), n);
    for (std::size_t k = 0; k < active.size(); ++k) Aa.row(k) = A.row(active[k]);
    const auto step = solve_small_qp(Eigen::MatrixXd::Identity(n, n), grad, Aa,
                                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size())));
    return step ? step->norm() : grad.norm();
  }
};

struct LocalResult {
  Eigen::VectorXd q;
  double cost = std::numeric_limits<double>::infinity();
  double projected_gradient = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

LocalResult Descend(const Model& model, Eigen::VectorXd q, const InitProblem& problem) {
  LocalResult out;
  Eigen::VectorXd rho;
  Eigen::MatrixXd J;
  double mu = -1.0;
  double cost = model.Cost(q);
  int it = 0;
  for (; it < problem.max_iterations; ++it) {
    model.Evaluate(q, rho, J);
    const Eigen::VectorXd g = J.transpose() * rho;
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    out.projected_gradient = model.ProjectedGradient(q, 2.0 * g);
    if (out.projected_gradient <= problem.tolerance) {
      out.converged = true;
      break;
    }
    if (mu < 0.0) mu = 1e-3 * std::max(JtJ.diagonal().maxCoeff(), 1e-12);

    bool accepted = false;
    while (!accepted && mu < 1e20) {
      const Eigen::MatrixXd H = JtJ + mu * Eigen::MatrixXd::Identity(model.n, model.n);
      const auto delta = solve_small_qp(H, g, model.A, model.c - model.A * q);
      if (!delta) {
        mu *= 4.0;
        continue;
      }
      const double predicted = -(2.0 * g.dot(*delta) + delta->dot(JtJ * *delta));
      if (!(predicted > 0.0)) {
        mu *= 4.0;
        if (delta->norm() <= 1e-15 * (1.0 + q.norm())) break;
        continue;
      }
      const Eigen::VectorXd candidate = q + *delta;
      const double new_cost = model.Cost(candidate);
      const double ratio = (cost - new_cost) / predicted;
      if (ratio > 1e-4) {
        q = candidate;
        cost = new_cost;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
        accepted = true;
      } else {
        mu *= 4.0;
        if (delta->norm() <= 1e-15 * (1.0 + q.norm())) break;
      }
    }
    if (!accepted) break;
  }
  if (!out.converged) {
    model.Evaluate(q, rho, J);
    out.projected_gradient = model.ProjectedGradient(q, 2.0 * J.transpose() * rho);
    out.converged = out.projected_gradient <= problem.tolerance;
  }
  out.q = q;
  out.cost = cost;
  out.iterations = it;
  return out;
}

void Validate(const InitProblem& problem, const Box& bounds) {
  if (problem.cones.size() < 3) throw InvalidInput("initializer needs at least 3 cones");
  if (problem.multistart_count < 1) throw InvalidInput("multistart_count must be >= 1");
  if (!(problem.tolerance > 0.0)) throw InvalidInput("tolerance must be positive");
  const int dims = problem.mode == Mode::Mode2D ? 2 : 3;
  for (int k = 0; k < dims; ++k)
    if (!(bounds.lo(k) <= bounds.hi(k))) throw InvalidInput("search bounds are empty");
  for (const auto& c : problem.cones)
    if (c.frame != Frame::World) throw InvalidInput("initializer expects world-frame cones");
}

}  // namespace

bool Box::contains(const Vec3& p, double tol) const {
  return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
}

Box default_bounds(std::span<const Cone> cones, double margin_m) {
  Box b;
  if (cones.empty()) return b;
  b.lo = b.hi = cones.front().origin;
  for (const auto& c : cones) {
    b.lo = b.lo.cwiseMin(c.origin);
    b.hi = b.hi.cwiseMax(c.origin);
  }
  b.lo.array() -= margin_m;
  b.hi.array() += margin_m;
  return b;
}

Eigen::VectorXd residuals(const Vec3& p, std::span<const Cone> cones) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(cones.size()));
  for (std::size_t i = 0; i < cones.size(); ++i) r(i) = geometry::distance_to_cone(p, cones[i]);
  return r;
}

double cost(const Vec3& p, std::span<const Cone> cones) { return residuals(p, cones).squaredNorm(); }

Eigen::MatrixX3d jacobian(const Vec3& p, std::span<const Cone> cones) {
  Eigen::MatrixX3d J(static_cast<Eigen::Index>(cones.size()), 3);
  for (std::size_t i = 0; i < cones.size(); ++i) {
    const auto rg = SignedResidual(p, cones[i]);
    const double sign = (rg.behind || rg.value >= 0.0) ? 1.0 : -1.0;
    J.row(i) = sign * rg.gradient.transpose();
  }
  return J;
}

Eigen::VectorXd constraint_residuals(const Vec3& p, std::span<const Cone> cones) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(cones.size()));
  for (std::size_t i = 0; i < cones.size(); ++i)
    r(i) = cones[i].axis.dot(p) - cones[i].axis.dot(cones[i].origin);
  return r;
}

InitSolution solve(const InitProblem& problem) {
  const Box bounds = problem.bounds ? *problem.bounds : default_bounds(problem.cones);
  Validate(problem, bounds);

  const int n = problem.mode == Mode::Mode2D ? 2 : 3;
  const int m_cones = static_cast<int>(problem.cones.size());
  Model model{problem.cones, n, Eigen::MatrixXd(m_cones + 2 * n, n), Eigen::VectorXd(m_cones + 2 * n)};
  for (int i = 0; i < m_cones; ++i) {
    const Cone& cone = problem.cones[i];
    model.A.row(i) = cone.axis.head(n).transpose();
    model.c(i) = cone.axis.dot(cone.origin);
  }
  for (int k = 0; k < n; ++k) {
    model.A.row(m_cones + 2 * k) = Eigen::RowVectorXd::Unit(n, k);
    model.c(m_cones + 2 * k) = bounds.lo(k);
    model.A.row(m_cones + 2 * k + 1) = -Eigen::RowVectorXd::Unit(n, k);
    model.c(m_cones + 2 * k + 1) = -bounds.hi(k);
  }

  std::vector<Eigen::VectorXd> starts;
  {
    Vec3 centroid = Vec3::Zero();
    for (const auto& c : problem.cones) centroid += c.origin;
    centroid /= static_cast<double>(problem.cones.size());
    starts.push_back(centroid.head(n));
    std::mt19937_64 rng(problem.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < problem.multistart_count; ++s) {
      Eigen::VectorXd q(n);
      for (int k = 0; k < n; ++k) q(k) = bounds.lo(k) + unit(rng) * (bounds.hi(k) - bounds.lo(k));
      starts.push_back(q);
    }
  }

  LocalResult best;
  int best_index = -1;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    // Nearest feasible point to the raw start.
    const auto feasible_start = solve_small_qp(identity, -starts[s], model.A, model.c);
    if (!feasible_start) continue;
    LocalResult local = Descend(model, *feasible_start, problem);
    if (local.cost < best.cost) {
      best = std::move(local);
      best_index = static_cast<int>(s);
    }
  }
  if (best_index < 0) throw InfeasibleError("no start admits a point satisfying every half-space constraint");

  InitSolution out;
  out.p = model.Lift(best.q);
  out.cost = best.cost;
  out.iterations = best.iterations;
  out.projected_gradient = best.projected_gradient;
  out.converged = best.converged;
  out.start_index = best_index;

  Eigen::VectorXd rho;
  Eigen::MatrixXd J;
  model.Evaluate(best.q, rho, J);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J.transpose() * J);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  for (const auto& cone : problem.cones) {
    if ((out.p - cone.origin).norm() < problem.apex_tolerance) {
      out.condition = std::numeric_limits<double>::infinity();
      break;
    }
  }
  out.degenerate = out.condition > problem.degeneracy_threshold;
  log::debug("init: cost " + std::to_string(out.cost) + " cond " + std::to_string(out.condition) +
             " start " + std::to_string(best_index));
  return out;
}

}  // namespace radloc::init
