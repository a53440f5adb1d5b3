#pragma once

// Pixel-track event processing: clustering of raw hits, coincidence pairing,
// centroiding, depth recovery from charge-collection delay, Compton angle
// reconstruction and cone construction in camera and world frames.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radloc/types.hpp"

namespace radloc::events {

struct PhysicalConstants {
  double electron_rest_energy_kev = 511.0;
  double charge_gathering_speed_um_per_ns = 23.256;  // CdTe at 450 V bias
  double sensor_thickness_mm = 2.0;
  double bias_voltage = 450.0;  // informational
  double coincidence_window_ns = 86.0;
};

/// eV -> J divisor used when energies must be expressed in joules. Angle
/// reconstruction never needs it because the Compton cosine is invariant
/// under a common rescaling of all energies.
inline constexpr double kElectronVoltsPerJoule = 6.242e18;

/// Electron rest energy derived from SI constants, in keV (about 510.999).
double electron_rest_energy_from_si_kev();

struct SensorGeometry {
  int columns = 256;
  int rows = 256;
  double pixel_pitch_mm = 0.055;
};

struct PixelHit {
  int col = 0;
  int row = 0;
  double energy_kev = 0.0;
  double toa_ns = 0.0;
};

void validate_hit(const PixelHit& hit, const SensorGeometry& sensor = {});

struct PixelTrack {
  std::vector<PixelHit> hits;
  double pixel_pitch_mm = 0.055;

  double first_toa_ns() const;
  double total_energy_kev() const;
};

enum class CentroidWeighting { Energy, Uniform };

struct TrackCentroid {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double energy_kev = 0.0;
  double toa_ns = 0.0;
};

struct ComptonPair {
  double electron_x_mm = 0.0;
  double electron_y_mm = 0.0;
  double photon_x_mm = 0.0;
  double photon_y_mm = 0.0;
  double electron_energy_kev = 0.0;
  double photon_energy_kev = 0.0;
  double electron_toa_ns = 0.0;
  double photon_toa_ns = 0.0;
};

enum class EventClass { Photoelectric, ComptonCandidate, Background };

std::string_view to_string(EventClass c);

/// Partitions hits into 8-connected tracks. Two hits are linked when they are
/// 8-neighbours and their arrival times differ by at most max_toa_gap_ns; tracks
/// are the connected components of that relation, ordered by first arrival.
std::vector<PixelTrack> cluster_hits(std::span<const PixelHit> hits, double max_toa_gap_ns,
                                     double pixel_pitch_mm = 0.055);

struct PairingResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // indices into the input, earlier first
  std::vector<std::size_t> unpaired;
  std::vector<std::size_t> ambiguous;  // members of 3+ mutually coincident groups
};

/// Greedy earliest-first disjoint pairing of tracks whose first arrival times
/// differ by at most window_ns. Groups of three or more tracks that all fall in
/// one window cannot be resolved and are reported as ambiguous.
PairingResult pair_coincident(std::span<const PixelTrack> tracks, double window_ns = 86.0);

TrackCentroid track_centroid(const PixelTrack& track,
                             CentroidWeighting weighting = CentroidWeighting::Energy);

EventClass classify_track(double total_energy_kev, bool paired, double threshold_kev = 800.0);

/// Depth difference between the electron and photon interaction points in mm.
double delta_z(double electron_toa_ns, double photon_toa_ns, const PhysicalConstants& k = {});

/// Compton cosine B. Values outside (-1, 1) mean the pair is unphysical.
double scattering_cosine(double electron_energy_kev, double photon_energy_kev,
                         const PhysicalConstants& k = {});

/// Scattering angle in radians. Throws ScatteringRejected when B is out of range.
double scattering_angle(double electron_energy_kev, double photon_energy_kev,
                        const PhysicalConstants& k = {});

/// Scattered photon energy for an incoming photon of energy_kev deflected by theta.
double compton_scattered_energy(double energy_kev, double theta, const PhysicalConstants& k = {});

/// Camera-frame cone. Origin at the electron event (z = depth difference),
/// axis from photon to electron, half-angle from the energy split.
Cone build_cone(const ComptonPair& pair, const PhysicalConstants& k = {});

/// Maps a camera-frame cone to the world frame through world<-body<-camera.
Cone transform_cone(const Cone& cone, const Pose& pose,
                    const Eigen::Isometry3d& body_from_camera = Eigen::Isometry3d::Identity());

/// Pose at time t: linear in position, slerp in orientation.
Pose interpolate_pose(std::span<const Pose> stream, double t);

enum class RoleAssignment {
  LowerEnergyIsElectron,  // single hypothesis per pair
  BothHypotheses,         // emit a cone for each role assignment
};

struct ReconstructionConfig {
  PhysicalConstants constants;
  SensorGeometry sensor;
  double max_toa_gap_ns = 100.0;
  double background_threshold_kev = 800.0;
  CentroidWeighting weighting = CentroidWeighting::Energy;
  RoleAssignment roles = RoleAssignment::LowerEnergyIsElectron;
  Eigen::Isometry3d body_from_camera = Eigen::Isometry3d::Identity();
};

struct EventCounts {
  std::size_t photoelectric = 0;
  std::size_t compton = 0;
  std::size_t background = 0;
  std::size_t rejected_pairs = 0;     // failed the Compton cosine gate
  std::size_t degenerate_pairs = 0;   // coincident interaction points
  std::size_t ambiguous_tracks = 0;   // dropped from pairing
  std::size_t outside_pose_range = 0;

  std::size_t total_events() const { return photoelectric + compton + background; }
};

/// One row of the event-statistics table.
struct ClassStatistic {
  EventClass event_class;
  std::size_t count;
  double rate_per_s;
  double share;
};

std::vector<ClassStatistic> class_statistics(const EventCounts& counts, double duration_s);

/// Renders counts as a fixed-width table with count, rate and relative share.
std::string format_statistics_table(const EventCounts& counts, double duration_s);

struct ReconstructionResult {
  std::vector<Cone> cones;  // world frame, time ordered
  EventCounts counts;
};

/// Full hit-stream path: cluster, pair, classify, build and transform cones.
ReconstructionResult reconstruct_from_hits(std::span<const PixelHit> hits,
                                           std::span<const Pose> poses,
                                           const ReconstructionConfig& config = {});

/// Pre-paired path: each record is already an (electron, photon) pair.
ReconstructionResult reconstruct_from_pairs(std::span<const ComptonPair> pairs,
                                            std::span<const Pose> poses,
                                            const ReconstructionConfig& config = {});

}  // namespace radloc::events
