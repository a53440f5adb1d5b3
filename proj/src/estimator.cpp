#include "radloc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "radloc/cone_geometry.hpp"
#include "radloc/errors.hpp"
#include "radloc/log.hpp"

namespace radloc::estimator {

namespace {

void RequireTracking(const FilterState& state, const char* op) {
  if (state.status != Status::Tracking)
    throw LifecycleError(std::string(op) + " requires an initialized hypothesis");
}

Mat3 Symmetrize(const Mat3& m) { return 0.5 * (m + m.transpose()); }

// Up to `count` cones whose origins are pairwise farther apart than
// `separation`, chosen greedily from the newest backwards and returned in
// arrival order.
std::vector<Cone> DistinctOrigins(const std::vector<Cone>& buffer, double separation,
                                  std::size_t count) {
  std::vector<Cone> picked;
  for (auto it = buffer.rbegin(); it != buffer.rend() && picked.size() < count; ++it) {
    const bool apart = std::all_of(picked.begin(), picked.end(), [&](const Cone& c) {
      return (c.origin - it->origin).norm() > separation;
    });
    if (apart) picked.push_back(*it);
  }
  std::reverse(picked.begin(), picked.end());
  return picked;
}

// Root-mean-square of the surface distances at p, each divided by the range
// from its apex, i.e. an angular misfit in radians.
double AngularRms(const Vec3& p, const std::vector<Cone>& cones) {
  double acc = 0.0;
  for (const auto& c : cones) {
    const double range = std::max((p - c.origin).norm(), 1e-9);
    const double a = geometry::distance_to_cone(p, c) / range;
    acc += a * a;
  }
  return std::sqrt(acc / static_cast<double>(cones.size()));
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::Collecting: return "collecting";
    case Status::Tracking: return "tracking";
  }
  return "unknown";
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Buffered: return "buffered";
    case Action::Initialized: return "initialized";
    case Action::Corrected: return "corrected";
    case Action::Rejected: return "rejected";
    case Action::Reset: return "reset";
  }
  return "unknown";
}

void NoiseConfig::validate() const {
  std::vector<std::string> bad;
  if (!(r > 0.0)) bad.push_back("r must be positive");
  if (!(far_variance > r)) bad.push_back("far_variance must exceed r");
  if (!(q >= 0.0)) bad.push_back("q must be nonnegative");
  if (!(outlier_gate > 0.0)) bad.push_back("outlier_gate must be positive");
  if (init_cone_count < 3) bad.push_back("init_cone_count must be at least 3");
  if (!(min_origin_separation >= 0.0)) bad.push_back("min_origin_separation must be nonnegative");
  if (!(initial_variance > 0.0)) bad.push_back("initial_variance must be positive");
  if (reset_reuse_count < 0) bad.push_back("reset_reuse_count must be nonnegative");
  if (max_buffer < init_cone_count) bad.push_back("max_buffer must be at least init_cone_count");
  if (!(init_residual_gate > 0.0)) bad.push_back("init_residual_gate must be positive");
  if (!bad.empty()) {
    std::string msg = "invalid noise configuration:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw InvalidInput(msg);
  }
}

FilterState make_state(Mode mode, const NoiseConfig& config) {
  FilterState s;
  s.mode = mode;
  s.omega = config.initial_variance * Mat3::Identity();
  return s;
}

FilterState predict(const FilterState& state, const NoiseConfig& config) {
  RequireTracking(state, "predict");
  FilterState out = state;
  out.omega += config.q * Mat3::Identity();
  return out;
}

Mat3 alignment_rotation(const Vec3& u_in) {
  const double n = u_in.norm();
  if (!(n > 0.0)) throw InvalidInput("alignment direction has zero length");
  const Vec3 u = u_in / n;
  const Vec3 e1 = Vec3::UnitX();
  const Vec3 axis = e1.cross(u);
  const double s = axis.norm();
  const double c = e1.dot(u);
  if (s < 1e-12) {
    if (c > 0.0) return Mat3::Identity();
    return Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitZ()).toRotationMatrix();
  }
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
}

Mat3 measurement_covariance(const Vec3& x, const Vec3& x_prime, const NoiseConfig& config) {
  const Vec3 d = x_prime - x;
  if (!(d.norm() > 1e-12)) throw InvalidInput("measurement direction undefined for zero innovation");
  const Mat3 P = alignment_rotation(d);
  const Vec3 diag(config.r, config.far_variance, config.far_variance);
  return Symmetrize(P * diag.asDiagonal() * P.transpose());
}

double innovation_distance(const FilterState& state, const Cone& cone, const NoiseConfig& config) {
  RequireTracking(state, "is_outlier");
  const Vec3 x_prime = geometry::project_to_cone(state.x, cone).point;
  const Vec3 delta = x_prime - state.x;
  if (!(delta.norm() > 1e-12)) return 0.0;
  const Mat3 S = state.omega + measurement_covariance(state.x, x_prime, config);
  return delta.dot(S.ldlt().solve(delta));
}

bool is_outlier(const FilterState& state, const Cone& cone, const NoiseConfig& config) {
  return innovation_distance(state, cone, config) > config.outlier_gate;
}

FilterState correct(const FilterState& state, const Cone& cone, const NoiseConfig& config) {
  RequireTracking(state, "correct");
  FilterState out = state;
  const Vec3 x_prime = geometry::project_to_cone(state.x, cone).point;
  const Vec3 delta = x_prime - state.x;
  if (!(delta.norm() > 1e-12)) {
    out.consecutive_outliers = 0;
    return out;
  }
  const Mat3 R = measurement_covariance(state.x, x_prime, config);
  const Mat3 S = state.omega + R;
  const auto S_ldlt = S.ldlt();
  if (delta.dot(S_ldlt.solve(delta)) > config.outlier_gate) {
    ++out.consecutive_outliers;
    return out;
  }
  // K = Omega S^-1, computed as (S^-1 Omega)' since both are symmetric.
  const Mat3 K = S_ldlt.solve(state.omega).transpose();
  const Mat3 I_K = Mat3::Identity() - K;
  out.x = state.x + K * delta;
  out.omega = Symmetrize(I_K * state.omega * I_K.transpose() + K * R * K.transpose());
  if (state.mode == Mode::Mode2D) {
    out.x.z() = 0.0;
    out.omega(0, 2) = out.omega(2, 0) = 0.0;
    out.omega(1, 2) = out.omega(2, 1) = 0.0;
    out.omega(2, 2) = config.initial_variance;
  }
  out.consecutive_outliers = 0;
  return out;
}

IngestResult ingest(const FilterState& state, const Cone& cone, const NoiseConfig& config,
                    std::vector<Cone>& buffer) {
  if (cone.frame != Frame::World) throw InvalidInput("estimator expects world-frame cones");
  IngestResult result;
  result.state = state;

  if (state.status == Status::Tracking) {
    FilterState next = correct(predict(state, config), cone, config);
    if (next.consecutive_outliers > state.consecutive_outliers) {
      buffer.push_back(cone);
      if (next.consecutive_outliers > 3) {
        const auto keep = std::min<std::size_t>(buffer.size(), config.reset_reuse_count);
        buffer.erase(buffer.begin(), buffer.end() - static_cast<std::ptrdiff_t>(keep));
        result.state = make_state(state.mode, config);
        result.action = Action::Reset;
        log::info("estimator: hypothesis reset after consecutive outliers");
        return result;
      }
      result.state = next;
      result.action = Action::Rejected;
      return result;
    }
    buffer.clear();
    result.state = next;
    result.action = Action::Corrected;
    return result;
  }

  buffer.push_back(cone);
  if (static_cast<int>(buffer.size()) > config.max_buffer) buffer.erase(buffer.begin());
  result.action = Action::Buffered;
  if (static_cast<int>(buffer.size()) < config.init_cone_count) return result;

  InitAttempt attempt;
  attempt.timestamp = cone.timestamp;
  const std::vector<Cone> distinct = DistinctOrigins(
      buffer, config.min_origin_separation, static_cast<std::size_t>(config.init_cone_count));
  attempt.cone_count = distinct.size();
  if (static_cast<int>(distinct.size()) < config.init_cone_count) {
    attempt.degenerate = true;
    attempt.reason = "coincident origins";
    result.init = attempt;
    return result;
  }

  init::InitProblem problem = config.initializer;
  problem.cones = distinct;
  problem.mode = state.mode;
  try {
    attempt.solution = init::solve(problem);
  } catch (const InfeasibleError& e) {
    attempt.reason = "infeasible";
    result.init = attempt;
    log::warn(std::string("estimator: initializer failed: ") + e.what());
    return result;
  }
  attempt.degenerate = attempt.solution->degenerate;
  if (attempt.degenerate) {
    attempt.reason = "ill-conditioned";
    result.init = attempt;
    return result;
  }
  if (AngularRms(attempt.solution->p, distinct) > config.init_residual_gate) {
    attempt.reason = "inconsistent cones";
    result.init = attempt;
    return result;
  }
  attempt.accepted = true;
  result.init = attempt;

  FilterState next = make_state(state.mode, config);
  next.x = attempt.solution->p;
  if (state.mode == Mode::Mode2D) next.x.z() = 0.0;
  next.status = Status::Tracking;
  result.state = next;
  result.action = Action::Initialized;
  buffer.clear();
  return result;
}

SourceEstimator::SourceEstimator(NoiseConfig config, Mode mode) : config_(std::move(config)) {
  config_.validate();
  state_ = make_state(mode, config_);
}

IngestResult SourceEstimator::ingest(const Cone& cone) {
  if (last_timestamp_ && cone.timestamp < *last_timestamp_)
    throw OrderingError("cone timestamps must be nondecreasing");
  last_timestamp_ = cone.timestamp;
  IngestResult result = estimator::ingest(state_, cone, config_, buffer_);
  state_ = result.state;
  if (result.init) attempts_.push_back(*result.init);
  if (result.action == Action::Reset) ++resets_;
  return result;
}

}  // namespace radloc::estimator
