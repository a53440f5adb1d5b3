#pragma once

// Closed-loop flight simulation: a parametric Compton camera model produces
// cones around a (possibly moving) point source while a UAV follows the
// search-then-orbit strategy driven by the estimator state.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "radloc/estimator.hpp"
#include "radloc/types.hpp"

namespace radloc::sim {

/// Rate constant giving 1.7 cones/s for a 3 GBq source at 10 m.
inline constexpr double kCalibratedRateConstant = 1.7 * 100.0 / 3e9;

struct DetectorModel {
  double cone_rate_constant = kCalibratedRateConstant;  // cones m^2 / (s Bq)
  double angular_sigma = 0.05;  // rad, noise on the half-angle
  double axis_sigma = 0.02;     // rad, noise on the axis direction
  double background_rate = 0.1;  // spurious cones per second
  double min_theta = 0.2;
  double max_theta = 1.4;
  Vec3 camera_offset = Vec3::Zero();  // detector position in the body frame, m

  void validate() const;
};

struct Area {
  double x_min = -50.0, x_max = 50.0;
  double y_min = -50.0, y_max = 50.0;

  Vec3 center(double z = 0.0) const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max), z}; }
  double inscribed_radius() const { return 0.5 * std::min(x_max - x_min, y_max - y_min); }
};

/// Flight program. Search runs the sweep/orbit strategy; Line flies a fixed
/// straight path regardless of the estimator, used for radial-motion studies.
enum class Program { Search, Line };

enum class Phase { SweepArea, OrbitHypothesis };

const char* to_string(Phase p);
const char* to_string(Program p);

struct Scenario {
  Vec3 source_initial = Vec3::Zero();
  Vec3 source_velocity = Vec3::Zero();
  double activity = 3e9;  // Bq
  Area area;
  double uav_speed = 1.0;  // m/s along the active circle or line; 0 hovers
  double uav_max_speed = 3.0;  // m/s cap while transferring between circles
  double orbit_radius = 10.0;
  std::optional<double> sweep_radius;  // default: circle inscribed in the area
  double flight_altitude = 5.0;
  DetectorModel detector;
  double duration = 300.0;
  std::uint64_t seed = 0;
  double timestep = 0.1;
  Mode mode = Mode::Mode2D;
  Program program = Program::Search;
  Vec3 line_start = Vec3::Zero();      // Line program only
  Vec3 line_direction = Vec3::UnitX();  // Line program only

  /// Throws SchemaError listing every invalid field.
  void validate() const;
};

/// A point on a circle and the pose facing its center.
Pose pose_on_circle(const Vec3& center, double radius, double angle, double t);

/// Poses on a circle at constant speed, starting at start_angle; successive
/// positions are exactly speed * timestep apart.
std::vector<Pose> trajectory_waypoints(const Vec3& center, double radius, double speed,
                                       double timestep, std::size_t count,
                                       double start_angle = 0.0, double t0 = 0.0);

/// Expected number of source cones per second at the given distance.
double cone_rate(const DetectorModel& model, double activity, double distance);

struct SampledCone {
  Cone cone;
  bool background = false;
};

/// Draws the cones detected during one step of length dt at the given pose.
std::vector<SampledCone> sample_cones(const Vec3& source, const Pose& pose,
                                      const DetectorModel& model, double activity, double dt,
                                      std::mt19937_64& rng);

struct StepRecord {
  double t = 0.0;
  Vec3 truth = Vec3::Zero();
  Vec3 uav = Vec3::Zero();
  std::optional<Vec3> estimate;  // present while tracking
  Mat3 omega = Mat3::Zero();
  Phase phase = Phase::SweepArea;
  estimator::Status status = estimator::Status::Collecting;
  std::string action;  // last estimator action in the step, or "none"
};

struct ConeRecord {
  SampledCone sampled;
  estimator::Action action = estimator::Action::Buffered;
  Vec3 truth = Vec3::Zero();
  estimator::Status status = estimator::Status::Collecting;  // after ingesting
  std::optional<Vec3> estimate;  // hypothesis after ingesting this cone
  Mat3 omega = Mat3::Zero();
};

struct PhaseTransition {
  double t = 0.0;
  Phase phase = Phase::SweepArea;
  Vec3 center = Vec3::Zero();
};

struct SimulationReport {
  Scenario scenario;
  std::vector<StepRecord> steps;
  std::vector<ConeRecord> cones;
  std::vector<PhaseTransition> transitions;
  std::vector<estimator::InitAttempt> init_attempts;
  int resets = 0;
};

SimulationReport run_scenario(const Scenario& scenario, const estimator::NoiseConfig& noise);

struct Summary {
  double duration = 0.0;
  std::optional<double> time_to_init;
  bool ever_tracked = false;
  bool degenerate_init = false;  // some initialization attempt was degenerate
  int init_attempts = 0;
  int resets = 0;
  int source_cones = 0;
  int background_cones = 0;
  int accepted_corrections = 0;
  int rejected_cones = 0;
  double acceptance_rate = 0.0;  // accepted / (accepted + rejected)
  double source_cone_rate = 0.0;
  double background_cone_rate = 0.0;
  std::optional<double> post_lock_mean_error;
  std::optional<double> post_lock_max_error;
  std::optional<double> post_lock_mean_planar_error;
  std::optional<Vec3> final_estimate;
};

Summary metrics(const SimulationReport& report);

/// Hypothesis errors after each accepted correction, counted from the
/// first initialization and stopping at the first reset.
std::vector<double> errors_by_correction(const SimulationReport& report);

}  // namespace radloc::sim
