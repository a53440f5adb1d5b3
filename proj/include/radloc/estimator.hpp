#pragma once

// Kalman filter over a static source position. Each cone contributes one
// pseudo-measurement: the projection of the current hypothesis onto the cone
// surface, trusted only along the correction direction.

#include <optional>
#include <string>
#include <vector>

#include "radloc/init_solver.hpp"
#include "radloc/types.hpp"

namespace radloc::estimator {

enum class Status { Collecting, Tracking };

/// Outcome of ingesting one cone. Rejected and Initialized refine the coarse
/// Buffered/Corrected/Reset vocabulary so that the event log is unambiguous.
enum class Action { Buffered, Initialized, Corrected, Rejected, Reset };

const char* to_string(Status s);
const char* to_string(Action a);

struct NoiseConfig {
  double r = 1.0;               // m^2 along the correction direction
  double far_variance = 1e9;    // m^2 across it
  double q = 0.01;              // m^2 added per predict
  double outlier_gate = 9.0;    // squared Mahalanobis distance
  int init_cone_count = 5;
  double min_origin_separation = 0.5;  // m
  double initial_variance = 10.0;      // m^2, isotropic covariance after init
  /// Rejected cones carried into the new buffer after a reset.
  int reset_reuse_count = 4;
  /// Oldest cones are dropped beyond this buffer length while collecting.
  int max_buffer = 20;
  /// Largest RMS angular residual (rad) of the initializer's cones at its
  /// solution; larger values mean the buffered cones share no common point.
  double init_residual_gate = 0.08;
  /// Settings for the batch initializer; cones and mode are filled in.
  init::InitProblem initializer;

  /// Throws InvalidInput when a field is out of range.
  void validate() const;
};

struct FilterState {
  Vec3 x = Vec3::Zero();
  Mat3 omega = Mat3::Identity();
  Mode mode = Mode::Mode3D;
  int consecutive_outliers = 0;
  Status status = Status::Collecting;
};

/// A fresh, uninitialized state.
FilterState make_state(Mode mode, const NoiseConfig& config);

/// Identity motion model with additive isotropic process noise.
FilterState predict(const FilterState& state, const NoiseConfig& config);

/// Rotation taking e1 onto the unit vector u by the shortest arc.
Mat3 alignment_rotation(const Vec3& u);

/// Measurement covariance P diag(r, far, far) P' with P e1 = unit(x' - x).
Mat3 measurement_covariance(const Vec3& x, const Vec3& x_prime, const NoiseConfig& config);

/// Squared Mahalanobis distance of the projection innovation; 0 when the
/// hypothesis already lies on the surface.
double innovation_distance(const FilterState& state, const Cone& cone, const NoiseConfig& config);

bool is_outlier(const FilterState& state, const Cone& cone, const NoiseConfig& config);

/// Gated Kalman update toward the projection of x onto the cone.
FilterState correct(const FilterState& state, const Cone& cone, const NoiseConfig& config);

struct InitAttempt {
  double timestamp = 0.0;
  std::size_t cone_count = 0;
  bool accepted = false;
  bool degenerate = false;
  std::string reason;  // empty when accepted
  std::optional<init::InitSolution> solution;
};

struct IngestResult {
  FilterState state;
  Action action = Action::Buffered;
  std::optional<InitAttempt> init;
};

/// One step of the hypothesis lifecycle. While collecting, `buffer` holds
/// the cones awaiting initialization; while tracking it holds the current run
/// of rejected cones.
IngestResult ingest(const FilterState& state, const Cone& cone, const NoiseConfig& config,
                    std::vector<Cone>& buffer);

/// Owns the state and buffer of one estimation session and enforces
/// timestamp order.
class SourceEstimator {
 public:
  explicit SourceEstimator(NoiseConfig config = {}, Mode mode = Mode::Mode3D);

  IngestResult ingest(const Cone& cone);

  const FilterState& state() const { return state_; }
  const NoiseConfig& config() const { return config_; }
  const std::vector<Cone>& buffer() const { return buffer_; }
  const std::vector<InitAttempt>& init_attempts() const { return attempts_; }
  int reset_count() const { return resets_; }

 private:
  NoiseConfig config_;
  FilterState state_;
  std::vector<Cone> buffer_;
  std::vector<InitAttempt> attempts_;
  int resets_ = 0;
  std::optional<double> last_timestamp_;
};

}  // namespace radloc::estimator
