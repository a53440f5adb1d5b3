#include "radloc/event_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "radloc/errors.hpp"
#include "radloc/log.hpp"

namespace radloc::events {

namespace {

constexpr double kMetersPerMm = 1e-3;
constexpr double kSecondsPerNs = 1e-9;

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double electron_rest_energy_from_si_kev() {
  constexpr double kElectronMassKg = 9.10938356e-31;
  constexpr double kSpeedOfLight = 299792458.0;
  constexpr double kJoulesPerKev = 1.602176634e-16;
  return kElectronMassKg * kSpeedOfLight * kSpeedOfLight / kJoulesPerKev;
}

void validate_hit(const PixelHit& hit, const SensorGeometry& sensor) {
  if (!(hit.energy_kev > 0.0)) throw InvalidInput("pixel hit energy must be positive");
  if (hit.col < 0 || hit.col >= sensor.columns || hit.row < 0 || hit.row >= sensor.rows)
    throw InvalidInput("pixel hit outside sensor bounds");
  if (!std::isfinite(hit.toa_ns)) throw InvalidInput("pixel hit time of arrival must be finite");
}

double PixelTrack::first_toa_ns() const {
  if (hits.empty()) throw InvalidInput("empty pixel track");
  double t = hits.front().toa_ns;
  for (const auto& h : hits) t = std::min(t, h.toa_ns);
  return t;
}

double PixelTrack::total_energy_kev() const {
  double e = 0.0;
  for (const auto& h : hits) e += h.energy_kev;
  return e;
}

std::string_view to_string(EventClass c) {
  switch (c) {
    case EventClass::Photoelectric:
      return "Photoelectric";
    case EventClass::ComptonCandidate:
      return "Compton";
    case EventClass::Background:
      return "Background";
  }
  return "?";
}

std::vector<PixelTrack> cluster_hits(std::span<const PixelHit> hits, double max_toa_gap_ns,
                                     double pixel_pitch_mm) {
  if (!(max_toa_gap_ns > 0.0)) throw InvalidInput("max_toa_gap must be positive");
  if (hits.empty()) return {};

  std::vector<std::size_t> order(hits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return hits[a].toa_ns < hits[b].toa_ns; });

  // Sliding window over arrival time; only hits within the gap can be linked.
  DisjointSet sets(order.size());
  std::size_t window_begin = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const PixelHit& hi = hits[order[i]];
    while (hi.toa_ns - hits[order[window_begin]].toa_ns > max_toa_gap_ns) ++window_begin;
    for (std::size_t j = window_begin; j < i; ++j) {
      const PixelHit& hj = hits[order[j]];
      if (std::abs(hi.col - hj.col) <= 1 && std::abs(hi.row - hj.row) <= 1) sets.unite(i, j);
    }
  }

  // Roots are the earliest member of each component, so iterating in time
  // order emits tracks sorted by first arrival.
  std::vector<std::size_t> track_of(order.size(), SIZE_MAX);
  std::vector<PixelTrack> tracks;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (track_of[root] == SIZE_MAX) {
      track_of[root] = tracks.size();
      tracks.push_back(PixelTrack{{}, pixel_pitch_mm});
    }
    tracks[track_of[root]].hits.push_back(hits[order[i]]);
  }
  return tracks;
}

PairingResult pair_coincident(std::span<const PixelTrack> tracks, double window_ns) {
  PairingResult result;
  std::vector<std::size_t> order(tracks.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> toa(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) toa[i] = tracks[i].first_toa_ns();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return toa[a] < toa[b]; });

  std::size_t i = 0;
  while (i < order.size()) {
    const double t0 = toa[order[i]];
    // Size of the group that lies within one window of the current track.
    std::size_t end = i + 1;
    while (end < order.size() && toa[order[end]] - t0 <= window_ns) ++end;
    const std::size_t group = end - i;
    if (group == 1) {
      result.unpaired.push_back(order[i]);
      i += 1;
    } else if (group == 2) {
      result.pairs.emplace_back(order[i], order[i + 1]);
      i += 2;
    } else {
      for (std::size_t k = i; k < end; ++k) result.ambiguous.push_back(order[k]);
      log::debug("dropping " + std::to_string(group) + " mutually coincident tracks");
      i = end;
    }
  }
  return result;
}

TrackCentroid track_centroid(const PixelTrack& track, CentroidWeighting weighting) {
  if (track.hits.empty()) throw InvalidInput("cannot take the centroid of an empty track");
  double wsum = 0.0, x = 0.0, y = 0.0;
  TrackCentroid c;
  c.toa_ns = track.hits.front().toa_ns;
  for (const auto& h : track.hits) {
    const double w = weighting == CentroidWeighting::Energy ? h.energy_kev : 1.0;
    x += w * (h.col + 0.5);
    y += w * (h.row + 0.5);
    wsum += w;
    c.energy_kev += h.energy_kev;
    c.toa_ns = std::min(c.toa_ns, h.toa_ns);
  }
  c.x_mm = x / wsum * track.pixel_pitch_mm;
  c.y_mm = y / wsum * track.pixel_pitch_mm;
  return c;
}

EventClass classify_track(double total_energy_kev, bool paired, double threshold_kev) {
  if (total_energy_kev > threshold_kev) return EventClass::Background;
  return paired ? EventClass::ComptonCandidate : EventClass::Photoelectric;
}

double delta_z(double electron_toa_ns, double photon_toa_ns, const PhysicalConstants& k) {
  // um/ns * ns = um; report mm.
  return k.charge_gathering_speed_um_per_ns * (electron_toa_ns - photon_toa_ns) * 1e-3;
}

double scattering_cosine(double electron_energy_kev, double photon_energy_kev,
                         const PhysicalConstants& k) {
  if (!(electron_energy_kev > 0.0) || !(photon_energy_kev > 0.0))
    throw InvalidInput("scattering energies must be positive");
  return 1.0 + k.electron_rest_energy_kev *
                   (1.0 / (electron_energy_kev + photon_energy_kev) - 1.0 / photon_energy_kev);
}

double scattering_angle(double electron_energy_kev, double photon_energy_kev,
                        const PhysicalConstants& k) {
  const double b = scattering_cosine(electron_energy_kev, photon_energy_kev, k);
  if (!(b > -1.0 && b < 1.0)) throw ScatteringRejected(b);
  return std::acos(b);
}

double compton_scattered_energy(double energy_kev, double theta, const PhysicalConstants& k) {
  return energy_kev / (1.0 + (energy_kev / k.electron_rest_energy_kev) * (1.0 - std::cos(theta)));
}

Cone build_cone(const ComptonPair& pair, const PhysicalConstants& k) {
  const double theta = scattering_angle(pair.electron_energy_kev, pair.photon_energy_kev, k);
  const Vec3 electron(pair.electron_x_mm, pair.electron_y_mm,
                      delta_z(pair.electron_toa_ns, pair.photon_toa_ns, k));
  const Vec3 photon(pair.photon_x_mm, pair.photon_y_mm, 0.0);
  const Vec3 axis = (electron - photon) * kMetersPerMm;
  if (axis.norm() < 1e-9) throw DegenerateGeometry("electron and photon events coincide");
  const double t = std::min(pair.electron_toa_ns, pair.photon_toa_ns) * kSecondsPerNs;
  return Cone(electron * kMetersPerMm, axis, theta, Frame::Camera, t);
}

Cone transform_cone(const Cone& cone, const Pose& pose, const Eigen::Isometry3d& body_from_camera) {
  const Eigen::Isometry3d world_from_camera = pose.transform() * body_from_camera;
  Cone out = cone;
  out.origin = world_from_camera * cone.origin;
  out.axis = (world_from_camera.linear() * cone.axis).normalized();
  out.frame = Frame::World;
  out.timestamp = pose.timestamp;
  return out;
}

Pose interpolate_pose(std::span<const Pose> stream, double t) {
  if (stream.empty()) throw InvalidInput("empty pose stream");
  const double first = stream.front().timestamp;
  const double last = stream.back().timestamp;
  if (!(t >= first && t <= last)) throw ExtrapolationError(t, first, last);

  auto upper = std::lower_bound(stream.begin(), stream.end(), t,
                                [](const Pose& p, double value) { return p.timestamp < value; });
  if (upper->timestamp == t) return *upper;
  const Pose& b = *upper;
  const Pose& a = *(upper - 1);
  const double s = (t - a.timestamp) / (b.timestamp - a.timestamp);
  Pose out;
  out.timestamp = t;
  out.position = a.position + s * (b.position - a.position);
  out.orientation = a.orientation.slerp(s, b.orientation).normalized();
  return out;
}

std::vector<ClassStatistic> class_statistics(const EventCounts& counts, double duration_s) {
  const double total = static_cast<double>(counts.total_events());
  auto row = [&](EventClass c, std::size_t n) {
    return ClassStatistic{c, n, duration_s > 0.0 ? n / duration_s : 0.0,
                          total > 0.0 ? n / total : 0.0};
  };
  return {row(EventClass::Photoelectric, counts.photoelectric),
          row(EventClass::ComptonCandidate, counts.compton),
          row(EventClass::Background, counts.background)};
}

std::string format_statistics_table(const EventCounts& counts, double duration_s) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %11s %10s %15s\n", "", "Event count", "Rate [1/s]",
                "Relative share");
  os << line;
  for (const auto& s : class_statistics(counts, duration_s)) {
    std::snprintf(line, sizeof line, "%-14s %11zu %10.4g %15.3f\n",
                  std::string(to_string(s.event_class)).c_str(), s.count, s.rate_per_s, s.share);
    os << line;
  }
  return os.str();
}

namespace {

void emit_cones(const ComptonPair& pair, std::span<const Pose> poses,
                const ReconstructionConfig& config, ReconstructionResult& out) {
  std::vector<ComptonPair> hypotheses{pair};
  if (config.roles == RoleAssignment::BothHypotheses) {
    ComptonPair swapped = pair;
    std::swap(swapped.electron_x_mm, swapped.photon_x_mm);
    std::swap(swapped.electron_y_mm, swapped.photon_y_mm);
    std::swap(swapped.electron_energy_kev, swapped.photon_energy_kev);
    std::swap(swapped.electron_toa_ns, swapped.photon_toa_ns);
    hypotheses.push_back(swapped);
  }

  std::vector<Cone> built;
  for (const auto& h : hypotheses) {
    try {
      built.push_back(build_cone(h, config.constants));
    } catch (const ScatteringRejected&) {
    } catch (const DegenerateGeometry&) {
      ++out.counts.degenerate_pairs;
      return;
    }
  }
  if (built.empty()) {
    ++out.counts.rejected_pairs;
    return;
  }
  ++out.counts.compton;
  for (const Cone& c : built) {
    Pose pose;
    try {
      pose = interpolate_pose(poses, c.timestamp);
    } catch (const ExtrapolationError&) {
      ++out.counts.outside_pose_range;
      return;
    }
    out.cones.push_back(transform_cone(c, pose, config.body_from_camera));
  }
}

void sort_by_time(std::vector<Cone>& cones) {
  std::stable_sort(cones.begin(), cones.end(),
                   [](const Cone& a, const Cone& b) { return a.timestamp < b.timestamp; });
}

}  // namespace

ReconstructionResult reconstruct_from_hits(std::span<const PixelHit> hits,
                                           std::span<const Pose> poses,
                                           const ReconstructionConfig& config) {
  for (const auto& h : hits) validate_hit(h, config.sensor);
  ReconstructionResult out;
  const auto tracks = cluster_hits(hits, config.max_toa_gap_ns, config.sensor.pixel_pitch_mm);
  const auto pairing = pair_coincident(tracks, config.constants.coincidence_window_ns);

  auto count_single = [&](std::size_t idx) {
    switch (classify_track(tracks[idx].total_energy_kev(), false, config.background_threshold_kev)) {
      case EventClass::Background:
        ++out.counts.background;
        break;
      default:
        ++out.counts.photoelectric;
        break;
    }
  };
  for (std::size_t idx : pairing.unpaired) count_single(idx);
  for (std::size_t idx : pairing.ambiguous) count_single(idx);
  out.counts.ambiguous_tracks = pairing.ambiguous.size();

  for (const auto& [a, b] : pairing.pairs) {
    const TrackCentroid ca = track_centroid(tracks[a], config.weighting);
    const TrackCentroid cb = track_centroid(tracks[b], config.weighting);
    if (classify_track(ca.energy_kev + cb.energy_kev, true, config.background_threshold_kev) ==
        EventClass::Background) {
      ++out.counts.background;
      continue;
    }
    const TrackCentroid& electron = ca.energy_kev <= cb.energy_kev ? ca : cb;
    const TrackCentroid& photon = ca.energy_kev <= cb.energy_kev ? cb : ca;
    emit_cones(ComptonPair{electron.x_mm, electron.y_mm, photon.x_mm, photon.y_mm,
                           electron.energy_kev, photon.energy_kev, electron.toa_ns, photon.toa_ns},
               poses, config, out);
  }
  sort_by_time(out.cones);
  return out;
}

ReconstructionResult reconstruct_from_pairs(std::span<const ComptonPair> pairs,
                                            std::span<const Pose> poses,
                                            const ReconstructionConfig& config) {
  ReconstructionResult out;
  for (const auto& p : pairs) {
    if (!(p.electron_energy_kev > 0.0) || !(p.photon_energy_kev > 0.0))
      throw InvalidInput("pair energies must be positive");
    if (std::abs(p.electron_toa_ns - p.photon_toa_ns) > config.constants.coincidence_window_ns) {
      ++out.counts.rejected_pairs;
      continue;
    }
    if (classify_track(p.electron_energy_kev + p.photon_energy_kev, true,
                       config.background_threshold_kev) == EventClass::Background) {
      ++out.counts.background;
      continue;
    }
    emit_cones(p, poses, config, out);
  }
  sort_by_time(out.cones);
  return out;
}

}  // namespace radloc::events
