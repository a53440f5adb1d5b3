#include "radloc/simulator.hpp"

#include <cmath>
#include <numbers>

#include "radloc/cone_geometry.hpp"
#include "radloc/errors.hpp"
#include "radloc/log.hpp"

namespace radloc::sim {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Quaterniond YawTowards(const Vec3& from, const Vec3& to) {
  const double dx = to.x() - from.x();
  const double dy = to.y() - from.y();
  const double yaw = (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx);
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
}

// Angular increment whose chord on a circle of the given radius is exactly
// speed * dt long.
double ChordAngle(double radius, double speed, double dt) {
  const double half = speed * dt / (2.0 * radius);
  return 2.0 * std::asin(std::min(1.0, half));
}

// Two unit vectors completing an orthonormal frame with the unit vector d.
std::pair<Vec3, Vec3> PerpendicularBasis(const Vec3& d) {
  const Vec3 b1 = geometry::reference_azimuth(d);
  return {b1, d.cross(b1).normalized()};
}

int DrawPoisson(double mean, std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

// One kinematic step along a circle: aim at the next waypoint ahead of the
// UAV's current bearing from the center and move there, capped in speed.
Vec3 StepAlongCircle(const Vec3& uav, const Vec3& center, double radius, double speed,
                     double max_speed, double dt) {
  const double rx = uav.x() - center.x();
  const double ry = uav.y() - center.y();
  const double bearing = (rx == 0.0 && ry == 0.0) ? 0.0 : std::atan2(ry, rx);
  const double next = bearing + ChordAngle(radius, speed, dt);
  const Vec3 target(center.x() + radius * std::cos(next), center.y() + radius * std::sin(next),
                    center.z());
  const Vec3 step = target - uav;
  const double limit = std::max(speed, max_speed) * dt;
  const double len = step.norm();
  if (len <= limit) return target;
  return uav + step * (limit / len);
}

}  // namespace

const char* to_string(Phase p) {
  return p == Phase::SweepArea ? "sweep" : "orbit";
}

const char* to_string(Program p) {
  return p == Program::Search ? "search" : "line";
}

void DetectorModel::validate() const {
  std::vector<std::string> bad;
  if (!(cone_rate_constant >= 0.0)) bad.push_back("detector.cone_rate_constant must be >= 0");
  if (!(angular_sigma >= 0.0)) bad.push_back("detector.angular_sigma must be >= 0");
  if (!(axis_sigma >= 0.0)) bad.push_back("detector.axis_sigma must be >= 0");
  if (!(background_rate >= 0.0)) bad.push_back("detector.background_rate must be >= 0");
  if (!(min_theta > 0.0 && min_theta < max_theta && max_theta < kPi))
    bad.push_back("detector theta range must satisfy 0 < min_theta < max_theta < pi");
  if (!camera_offset.allFinite()) bad.push_back("detector.camera_offset must be finite");
  if (!bad.empty()) throw SchemaError(bad);
}

void Scenario::validate() const {
  std::vector<std::string> bad;
  try {
    detector.validate();
  } catch (const SchemaError& e) {
    bad = e.problems();
  }
  if (!source_initial.allFinite()) bad.push_back("source.initial must be finite");
  if (!source_velocity.allFinite()) bad.push_back("source.velocity must be finite");
  if (!(activity > 0.0)) bad.push_back("source.activity must be > 0");
  if (!(area.x_max > area.x_min && area.y_max > area.y_min)) bad.push_back("area must be nonempty");
  if (!(uav_speed >= 0.0)) bad.push_back("uav.speed must be >= 0");
  if (!(uav_max_speed > 0.0)) bad.push_back("uav.max_speed must be > 0");
  if (!(orbit_radius > 0.0)) bad.push_back("uav.orbit_radius must be > 0");
  if (sweep_radius && !(*sweep_radius > 0.0)) bad.push_back("uav.sweep_radius must be > 0");
  if (!std::isfinite(flight_altitude)) bad.push_back("uav.altitude must be finite");
  if (!(duration >= 0.0)) bad.push_back("duration must be >= 0");
  if (!(timestep > 0.0)) bad.push_back("timestep must be > 0");
  if (program == Program::Line && !(line_direction.norm() > 0.0))
    bad.push_back("uav.line_direction must be nonzero");
  if (!bad.empty()) throw SchemaError(bad);
}

Pose pose_on_circle(const Vec3& center, double radius, double angle, double t) {
  const Vec3 p(center.x() + radius * std::cos(angle), center.y() + radius * std::sin(angle),
               center.z());
  return Pose(t, p, YawTowards(p, center));
}

std::vector<Pose> trajectory_waypoints(const Vec3& center, double radius, double speed,
                                       double timestep, std::size_t count, double start_angle,
                                       double t0) {
  if (!(radius > 0.0)) throw InvalidInput("trajectory radius must be positive");
  if (!(timestep > 0.0) || !(speed >= 0.0)) throw InvalidInput("invalid trajectory speed or timestep");
  const double step = ChordAngle(radius, speed, timestep);
  std::vector<Pose> poses;
  poses.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    poses.push_back(pose_on_circle(center, radius, start_angle + static_cast<double>(k) * step,
                                   t0 + static_cast<double>(k) * timestep));
  return poses;
}

double cone_rate(const DetectorModel& model, double activity, double distance) {
  if (!(distance > 0.0)) throw InvalidInput("cone rate undefined at zero distance");
  return model.cone_rate_constant * activity / (distance * distance);
}

std::vector<SampledCone> sample_cones(const Vec3& source, const Pose& pose,
                                      const DetectorModel& model, double activity, double dt,
                                      std::mt19937_64& rng) {
  if (!(dt > 0.0)) throw InvalidInput("sampling interval must be positive");
  const Vec3 origin = pose.transform() * model.camera_offset;
  const Vec3 to_source = source - origin;
  const double distance = to_source.norm();
  if (!(distance > 1e-9)) throw InvalidInput("source coincides with the detector");
  const Vec3 dir = to_source / distance;
  const auto [p1, p2] = PerpendicularBasis(dir);

  std::uniform_real_distribution<double> theta_dist(model.min_theta, model.max_theta);
  std::uniform_real_distribution<double> azimuth_dist(0.0, 2.0 * kPi);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<SampledCone> out;
  const int k = DrawPoisson(cone_rate(model, activity, distance) * dt, rng);
  for (int i = 0; i < k; ++i) {
    const double theta = theta_dist(rng);
    const double psi = azimuth_dist(rng);
    const Vec3 hinge = std::cos(psi) * p1 + std::sin(psi) * p2;
    Vec3 axis = Eigen::AngleAxisd(theta, hinge) * dir;

    const double g_theta = normal(rng);
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    const double measured = std::clamp(theta + model.angular_sigma * g_theta, 1e-3, kPi - 1e-3);
    if (model.axis_sigma > 0.0) {
      const auto [a1, a2] = PerpendicularBasis(axis);
      axis = (axis + model.axis_sigma * (g1 * a1 + g2 * a2)).normalized();
    }
    out.push_back({Cone(origin, axis, measured, Frame::World, pose.timestamp), false});
  }

  const int nb = DrawPoisson(model.background_rate * dt, rng);
  for (int i = 0; i < nb; ++i) {
    Vec3 axis;
    do {
      // Separate statements fix the draw order, which argument lists do not.
      const double ax = normal(rng);
      const double ay = normal(rng);
      const double az = normal(rng);
      axis = Vec3(ax, ay, az);
    } while (axis.norm() < 1e-9);
    out.push_back({Cone(origin, axis, theta_dist(rng), Frame::World, pose.timestamp), true});
  }
  return out;
}

SimulationReport run_scenario(const Scenario& scenario, const estimator::NoiseConfig& noise) {
  scenario.validate();
  estimator::NoiseConfig config = noise;
  config.initializer.seed = scenario.seed;
  estimator::SourceEstimator est(config, scenario.mode);
  std::mt19937_64 rng(scenario.seed);

  SimulationReport report;
  report.scenario = scenario;

  const Vec3 sweep_center = scenario.area.center(scenario.flight_altitude);
  const double sweep_radius = scenario.sweep_radius.value_or(scenario.area.inscribed_radius());
  const Vec3 line_dir = scenario.line_direction.normalized();

  Vec3 uav = scenario.program == Program::Search
                 ? pose_on_circle(sweep_center, sweep_radius, 0.0, 0.0).position
                 : scenario.line_start;
  Phase phase = Phase::SweepArea;
  Vec3 orbit_center = sweep_center;

  const auto steps = static_cast<long>(std::floor(scenario.duration / scenario.timestep + 1e-9));
  report.steps.reserve(static_cast<std::size_t>(std::max(0L, steps)));
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * scenario.timestep;
    const Vec3 source = scenario.source_initial + t * scenario.source_velocity;

    const Vec3 look = scenario.program == Program::Search
                          ? (phase == Phase::OrbitHypothesis ? orbit_center : sweep_center)
                          : Vec3(uav + line_dir);
    const Pose pose(t, uav, YawTowards(uav, look));

    std::string last_action = "none";
    if ((source - uav).norm() > 1e-6) {
      for (auto& sampled : sample_cones(source, pose, scenario.detector, scenario.activity,
                                        scenario.timestep, rng)) {
        const auto result = est.ingest(sampled.cone);
        ConeRecord rec{sampled, result.action, source, result.state.status, std::nullopt,
                       result.state.omega};
        if (result.state.status == estimator::Status::Tracking) rec.estimate = result.state.x;
        report.cones.push_back(std::move(rec));
        last_action = estimator::to_string(result.action);
      }
    }

    const auto& state = est.state();
    if (state.status == estimator::Status::Tracking) {
      orbit_center = Vec3(state.x.x(), state.x.y(), scenario.flight_altitude);
      if (phase == Phase::SweepArea) {
        phase = Phase::OrbitHypothesis;
        report.transitions.push_back({t, phase, state.x});
      }
    } else if (phase == Phase::OrbitHypothesis) {
      phase = Phase::SweepArea;
      report.transitions.push_back({t, phase, sweep_center});
    }

    StepRecord step;
    step.t = t;
    step.truth = source;
    step.uav = uav;
    if (state.status == estimator::Status::Tracking) step.estimate = state.x;
    step.omega = state.omega;
    step.phase = phase;
    step.status = state.status;
    step.action = last_action;
    report.steps.push_back(std::move(step));

    if (scenario.program == Program::Line) {
      uav += scenario.uav_speed * scenario.timestep * line_dir;
    } else if (phase == Phase::OrbitHypothesis) {
      uav = StepAlongCircle(uav, orbit_center, scenario.orbit_radius, scenario.uav_speed,
                            scenario.uav_max_speed, scenario.timestep);
    } else {
      uav = StepAlongCircle(uav, sweep_center, sweep_radius, scenario.uav_speed,
                            scenario.uav_max_speed, scenario.timestep);
    }
  }

  report.init_attempts = est.init_attempts();
  report.resets = est.reset_count();
  log::info("simulation finished: " + std::to_string(report.cones.size()) + " cones, " +
            std::to_string(report.resets) + " resets");
  return report;
}

Summary metrics(const SimulationReport& report) {
  Summary s;
  s.duration = static_cast<double>(report.steps.size()) * report.scenario.timestep;
  s.resets = report.resets;
  s.init_attempts = static_cast<int>(report.init_attempts.size());
  for (const auto& a : report.init_attempts) s.degenerate_init = s.degenerate_init || a.degenerate;

  for (const auto& c : report.cones) {
    (c.sampled.background ? s.background_cones : s.source_cones)++;
    if (c.action == estimator::Action::Corrected) ++s.accepted_corrections;
    if (c.action == estimator::Action::Rejected || c.action == estimator::Action::Reset)
      ++s.rejected_cones;
    if (c.action == estimator::Action::Initialized && !s.time_to_init)
      s.time_to_init = c.sampled.cone.timestamp;
  }
  const int judged = s.accepted_corrections + s.rejected_cones;
  s.acceptance_rate = judged > 0 ? static_cast<double>(s.accepted_corrections) / judged : 0.0;
  if (s.duration > 0.0) {
    s.source_cone_rate = s.source_cones / s.duration;
    s.background_cone_rate = s.background_cones / s.duration;
  }

  double sum = 0.0, sum_planar = 0.0, max_err = 0.0;
  int n = 0;
  for (const auto& step : report.steps) {
    if (!step.estimate) continue;
    s.ever_tracked = true;
    const Vec3 e = *step.estimate - step.truth;
    sum += e.norm();
    sum_planar += e.head<2>().norm();
    max_err = std::max(max_err, e.norm());
    ++n;
  }
  if (n > 0) {
    s.post_lock_mean_error = sum / n;
    s.post_lock_mean_planar_error = sum_planar / n;
    s.post_lock_max_error = max_err;
  }
  if (!report.steps.empty() && report.steps.back().estimate) s.final_estimate = report.steps.back().estimate;
  return s;
}

std::vector<double> errors_by_correction(const SimulationReport& report) {
  std::vector<double> out;
  bool locked = false;
  for (const auto& c : report.cones) {
    if (c.action == estimator::Action::Initialized) {
      if (locked) break;
      locked = true;
    } else if (c.action == estimator::Action::Reset && locked) {
      break;
    } else if (locked && c.action == estimator::Action::Corrected && c.estimate) {
      out.push_back((*c.estimate - c.truth).norm());
    }
  }
  return out;
}

}  // namespace radloc::sim
