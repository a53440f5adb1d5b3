#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "radloc/errors.hpp"
#include "radloc/event_pipeline.hpp"

namespace radloc::events {
namespace {

constexpr double kPi = std::numbers::pi;

PixelTrack TrackAt(double toa, int col = 10, int row = 10, double energy = 100.0) {
  return PixelTrack{{PixelHit{col, row, energy, toa}}, 0.055};
}

TEST(Constants, ElectronRestEnergyFromSiConstants) {
  EXPECT_NEAR(electron_rest_energy_from_si_kev(), 511.0, 0.01);
}

TEST(Constants, WindowMatchesSensorThickness) {
  const PhysicalConstants k;
  const double depth_mm = k.charge_gathering_speed_um_per_ns * k.coincidence_window_ns * 1e-3;
  EXPECT_NEAR(depth_mm, k.sensor_thickness_mm, 1e-3 * k.sensor_thickness_mm);
}

TEST(ClusterHits, EmptyInput) { EXPECT_TRUE(cluster_hits({}, 100.0).empty()); }

TEST(ClusterHits, AdjacentHitsMerge) {
  const std::vector<PixelHit> hits{{10, 10, 50.0, 0.0}, {11, 10, 60.0, 5.0}};
  const auto tracks = cluster_hits(hits, 100.0);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].hits.size(), 2u);
}

TEST(ClusterHits, DistantHitsSplit) {
  const std::vector<PixelHit> hits{{10, 10, 50.0, 0.0}, {100, 100, 60.0, 0.0}};
  EXPECT_EQ(cluster_hits(hits, 100.0).size(), 2u);
}

TEST(ClusterHits, ChainThroughNeighbours) {
  const std::vector<PixelHit> hits{{10, 10, 5.0, 0.0}, {12, 12, 5.0, 2.0}, {11, 11, 5.0, 1.0}};
  EXPECT_EQ(cluster_hits(hits, 100.0).size(), 1u);
}

TEST(ClusterHits, TimeGapSplitsNeighbours) {
  const std::vector<PixelHit> hits{{10, 10, 5.0, 0.0}, {11, 10, 5.0, 500.0}};
  EXPECT_EQ(cluster_hits(hits, 100.0).size(), 2u);
}

TEST(PairCoincident, FigureFiveDelay) {
  const std::vector<PixelTrack> t{TrackAt(0.0), TrackAt(20.31)};
  const auto r = pair_coincident(t);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(PairCoincident, OutsideWindow) {
  const std::vector<PixelTrack> t{TrackAt(0.0), TrackAt(90.0)};
  const auto r = pair_coincident(t);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.unpaired.size(), 2u);
}

TEST(PairCoincident, ThreeTracksNarrowWindow) {
  // With a 20 ns window the third track at 30 ns is outside the window of
  // the first and is left unpaired.
  const std::vector<PixelTrack> t{TrackAt(0.0), TrackAt(10.0), TrackAt(30.0)};
  const auto r = pair_coincident(t, 20.0);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(r.unpaired, std::vector<std::size_t>{2});
}

TEST(PairCoincident, ThreeTracksDefaultWindowAreAmbiguous) {
  const std::vector<PixelTrack> t{TrackAt(0.0), TrackAt(10.0), TrackAt(30.0)};
  const auto r = pair_coincident(t);
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.ambiguous.size(), 3u);
}

// Exhaustive oracle: the maximum number of disjoint in-window pairs that
// avoid any 3+ mutually coincident group.
std::size_t MaxPairs(const std::vector<double>& toa, std::vector<bool> used, double window) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < toa.size(); ++i) {
    if (used[i]) continue;
    for (std::size_t j = i + 1; j < toa.size(); ++j) {
      if (used[j] || std::abs(toa[i] - toa[j]) > window) continue;
      used[i] = used[j] = true;
      best = std::max(best, 1 + MaxPairs(toa, used, window));
      used[i] = used[j] = false;
    }
  }
  return best;
}

TEST(PairCoincident, GreedyMatchesExhaustiveOnIsolatedGroups) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(2, 5);
  std::uniform_real_distribution<double> gap(0.0, 60.0);
  std::bernoulli_distribution jump(0.3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = count(rng);
    std::vector<double> toa;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      toa.push_back(t);
      t += gap(rng) + (jump(rng) ? 100.0 : 0.0);
    }
    std::vector<PixelTrack> tracks;
    for (double v : toa) tracks.push_back(TrackAt(v));
    const auto r = pair_coincident(tracks, 20.0);
    for (const auto& [a, b] : r.pairs) EXPECT_LE(std::abs(toa[a] - toa[b]), 20.0);
    if (r.ambiguous.empty()) {
      EXPECT_EQ(r.pairs.size(), MaxPairs(toa, std::vector<bool>(toa.size(), false), 20.0));
    }
    std::vector<std::size_t> seen;
    for (const auto& [a, b] : r.pairs) {
      seen.push_back(a);
      seen.push_back(b);
    }
    seen.insert(seen.end(), r.unpaired.begin(), r.unpaired.end());
    seen.insert(seen.end(), r.ambiguous.begin(), r.ambiguous.end());
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
    EXPECT_EQ(seen.size(), toa.size());
  }
}

TEST(TrackCentroid, SingleHitPixelCenter) {
  const auto c = track_centroid(PixelTrack{{PixelHit{0, 0, 100.0, 7.0}}, 0.055});
  EXPECT_NEAR(c.x_mm, 0.0275, 1e-15);
  EXPECT_NEAR(c.y_mm, 0.0275, 1e-15);
  EXPECT_DOUBLE_EQ(c.energy_kev, 100.0);
  EXPECT_DOUBLE_EQ(c.toa_ns, 7.0);
}

TEST(TrackCentroid, EnergyWeighting) {
  const PixelTrack equal{{{0, 0, 100.0, 3.0}, {2, 0, 100.0, 1.0}}, 0.055};
  EXPECT_NEAR(track_centroid(equal).x_mm, 1.5 * 0.055, 1e-15);
  EXPECT_DOUBLE_EQ(track_centroid(equal).toa_ns, 1.0);
  const PixelTrack heavy{{{0, 0, 300.0, 0.0}, {2, 0, 100.0, 0.0}}, 0.055};
  EXPECT_NEAR(track_centroid(heavy).x_mm, (3 * 0.5 + 1 * 2.5) / 4 * 0.055, 1e-15);
  EXPECT_NEAR(track_centroid(heavy, CentroidWeighting::Uniform).x_mm, 1.5 * 0.055, 1e-15);
}

TEST(TrackCentroid, EmptyTrackThrows) {
  EXPECT_THROW(track_centroid(PixelTrack{}), InvalidInput);
}

TEST(ClassifyTrack, Examples) {
  EXPECT_EQ(classify_track(662.0, false), EventClass::Photoelectric);
  EXPECT_EQ(classify_track(850.0, false), EventClass::Background);
  EXPECT_EQ(classify_track(315.70 + 394.22, true), EventClass::ComptonCandidate);
}

TEST(ClassifyTrack, MonotoneInEnergy) {
  bool background = false;
  for (double e = 1.0; e < 2000.0; e += 0.5) {
    const bool now = classify_track(e, false) == EventClass::Background;
    if (background) EXPECT_TRUE(now);
    background = now;
  }
}

TEST(DeltaZ, Values) {
  EXPECT_NEAR(delta_z(20.31, 0.0), 0.47232936, 1e-9);
  EXPECT_DOUBLE_EQ(delta_z(5.0, 5.0), 0.0);
  EXPECT_NEAR(delta_z(86.0, 0.0), 2.0, 1e-4);
  EXPECT_DOUBLE_EQ(delta_z(3.0, 11.0), -delta_z(11.0, 3.0));
}

TEST(ScatteringAngle, FigureFive) {
  EXPECT_NEAR(scattering_angle(315.70, 394.22), 1.13, 0.01);
}

TEST(ScatteringAngle, SymmetricSplit) {
  EXPECT_NEAR(scattering_cosine(511.0, 511.0), 0.5, 1e-15);
  EXPECT_NEAR(scattering_angle(511.0, 511.0), kPi / 3, 1e-12);
}

TEST(ScatteringAngle, VanishingElectronEnergy) {
  EXPECT_LT(scattering_angle(1e-9, 500.0), 1e-3);
}

TEST(ScatteringAngle, RejectsUnphysicalPair) {
  try {
    scattering_angle(1000.0, 100.0);
    FAIL() << "expected rejection";
  } catch (const ScatteringRejected& e) {
    // 1 + 511 (1/1100 - 1/100)
    EXPECT_NEAR(e.cosine(), 1.0 + 511.0 * (1.0 / 1100.0 - 1.0 / 100.0), 1e-12);
    EXPECT_NEAR(e.cosine(), -3.645, 1e-3);
  }
}

TEST(ScatteringAngle, RoundTripWithScatteredEnergy) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> energy(100.0, 1000.0);
  std::uniform_real_distribution<double> angle(0.05, kPi - 0.05);
  for (int i = 0; i < 20000; ++i) {
    const double e = energy(rng);
    const double theta = angle(rng);
    const double scattered = compton_scattered_energy(e, theta);
    EXPECT_NEAR(scattering_angle(e - scattered, scattered), theta, 1e-9);
  }
}

TEST(BuildCone, FigureFivePair) {
  const ComptonPair p{1.0, 2.0, 1.0, 1.0, 315.70, 394.22, 20.31, 0.0};
  const Cone c = build_cone(p);
  EXPECT_EQ(c.frame, Frame::Camera);
  EXPECT_NEAR((c.origin - Vec3(0.001, 0.002, 0.00047232936)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((c.axis - Vec3(0.0, 1.0, 0.47232936).normalized()).norm(), 0.0, 1e-9);
  EXPECT_NEAR(c.half_angle, 1.13, 0.01);
}

TEST(BuildCone, PureDepthSeparation) {
  const ComptonPair p{1.0, 1.0, 1.0, 1.0, 200.0, 400.0, 10.0, 0.0};
  EXPECT_NEAR((build_cone(p).axis - Vec3::UnitZ()).norm(), 0.0, 1e-15);
}

TEST(BuildCone, CoincidentEventsThrow) {
  const ComptonPair p{1.0, 1.0, 1.0, 1.0, 200.0, 400.0, 0.0, 0.0};
  EXPECT_THROW(build_cone(p), DegenerateGeometry);
}

TEST(TransformCone, IdentityAndTranslation) {
  const Cone c(Vec3(0.1, 0.2, 0.3), Vec3(1, 2, 3), 0.7, Frame::Camera, 1.0);
  const Cone w = transform_cone(c, Pose(5.0, Vec3::Zero(), Eigen::Quaterniond::Identity()));
  EXPECT_EQ(w.frame, Frame::World);
  EXPECT_EQ(w.origin, c.origin);
  EXPECT_EQ(w.axis, c.axis);
  EXPECT_DOUBLE_EQ(w.timestamp, 5.0);

  const Cone t = transform_cone(c, Pose(0.0, Vec3(10, 0, 5), Eigen::Quaterniond::Identity()));
  EXPECT_NEAR((t.origin - (c.origin + Vec3(10, 0, 5))).norm(), 0.0, 1e-12);
  EXPECT_EQ(t.axis, c.axis);
}

TEST(TransformCone, YawRotatesAxis) {
  const Cone c(Vec3::Zero(), Vec3::UnitX(), 0.5, Frame::Camera);
  const Eigen::Quaterniond yaw(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()));
  const Cone w = transform_cone(c, Pose(0.0, Vec3::Zero(), yaw));
  EXPECT_NEAR((w.axis - Vec3::UnitY()).norm(), 0.0, 1e-12);
  EXPECT_EQ(w.half_angle, c.half_angle);
}

TEST(TransformCone, InverseRoundTrip) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    const double a = n(rng), b = n(rng), cc = n(rng), d = n(rng);
    const Eigen::Quaterniond q = Eigen::Quaterniond(a, b, cc, d).normalized();
    const double px = n(rng), py = n(rng), pz = n(rng);
    const Pose pose(0.0, Vec3(px, py, pz), q);
    const Cone c(Vec3(n(rng), 0.0, 0.0), Vec3(0.3, -0.2, 1.0), 1.0, Frame::Camera);
    const Cone w = transform_cone(c, pose);
    EXPECT_NEAR(w.axis.norm(), 1.0, 1e-12);
    const Eigen::Isometry3d inv = pose.transform().inverse();
    EXPECT_LT((inv * w.origin - c.origin).norm(), 1e-9);
    EXPECT_LT(std::acos(std::clamp((inv.linear() * w.axis).dot(c.axis), -1.0, 1.0)), 1e-7);
  }
}

TEST(InterpolatePose, SampleMidpointAndSlerp) {
  const Eigen::Quaterniond yaw90(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()));
  const std::vector<Pose> s{Pose(0.0, Vec3::Zero(), Eigen::Quaterniond::Identity()),
                            Pose(2.0, Vec3(2, 0, 0), yaw90)};
  EXPECT_EQ(interpolate_pose(s, 2.0).position, Vec3(2, 0, 0));
  const Pose mid = interpolate_pose(s, 1.0);
  EXPECT_NEAR((mid.position - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  const Eigen::Quaterniond yaw45(Eigen::AngleAxisd(kPi / 4, Vec3::UnitZ()));
  EXPECT_NEAR(mid.orientation.angularDistance(yaw45), 0.0, 1e-12);
  EXPECT_THROW(interpolate_pose(s, 2.5), ExtrapolationError);
  EXPECT_THROW(interpolate_pose(s, -0.1), ExtrapolationError);
}

TEST(Statistics, TableFormatting) {
  EventCounts counts;
  counts.photoelectric = 6073;
  counts.compton = 18;
  counts.background = 8;
  const auto rows = class_statistics(counts, 250.0);
  EXPECT_NEAR(rows[0].rate_per_s, 24.292, 1e-9);
  EXPECT_NEAR(rows[1].rate_per_s, 0.072, 1e-12);
  EXPECT_NEAR(rows[2].rate_per_s, 0.032, 1e-12);
  const std::string table = format_statistics_table(counts, 250.0);
  EXPECT_NE(table.find("24.29"), std::string::npos);
  EXPECT_NE(table.find("0.996"), std::string::npos);
  EXPECT_NE(table.find("0.003"), std::string::npos);
  EXPECT_NE(table.find("0.001"), std::string::npos);
}

TEST(Statistics, ZeroDurationAndEmpty) {
  const auto rows = class_statistics(EventCounts{}, 0.0);
  for (const auto& r : rows) {
    EXPECT_EQ(r.count, 0u);
    EXPECT_EQ(r.rate_per_s, 0.0);
    EXPECT_EQ(r.share, 0.0);
  }
}

TEST(Reconstruct, PairsPathCountsRejectedAndOutOfRange) {
  const std::vector<Pose> poses{Pose(0.0, Vec3::Zero(), Eigen::Quaterniond::Identity()),
                                Pose(1.0, Vec3::Zero(), Eigen::Quaterniond::Identity())};
  std::vector<ComptonPair> pairs{
      {1.0, 2.0, 1.0, 1.0, 315.70, 394.22, 1e8 + 20.31, 1e8},    // valid, t = 0.1 s
      {1.0, 2.0, 1.0, 1.0, 300.0, 50.0, 1e8 + 10.0, 1e8},        // B out of range
      {1.0, 2.0, 1.0, 1.0, 315.70, 394.22, 5e9 + 20.31, 5e9},    // t = 5 s
      {1.0, 2.0, 1.0, 1.0, 500.0, 400.0, 2e8, 2e8},              // over 800 keV
  };
  const auto r = reconstruct_from_pairs(pairs, poses);
  EXPECT_EQ(r.cones.size(), 1u);
  EXPECT_EQ(r.counts.rejected_pairs, 1u);
  EXPECT_EQ(r.counts.outside_pose_range, 1u);
  EXPECT_EQ(r.counts.background, 1u);
  EXPECT_EQ(r.counts.compton, 2u);
  EXPECT_EQ(r.cones[0].frame, Frame::World);
}

TEST(Reconstruct, BothHypothesesEmitsTwoCones) {
  const std::vector<Pose> poses{Pose(0.0, Vec3::Zero(), Eigen::Quaterniond::Identity()),
                                Pose(1.0, Vec3::Zero(), Eigen::Quaterniond::Identity())};
  const std::vector<ComptonPair> pairs{{1.0, 2.0, 1.0, 1.0, 315.70, 394.22, 1e8 + 20.31, 1e8}};
  ReconstructionConfig cfg;
  cfg.roles = RoleAssignment::BothHypotheses;
  EXPECT_EQ(reconstruct_from_pairs(pairs, poses, cfg).cones.size(), 2u);
}

TEST(Reconstruct, HitStreamAssignsLowerEnergyAsElectron) {
  const std::vector<Pose> poses{Pose(0.0, Vec3::Zero(), Eigen::Quaterniond::Identity()),
                                Pose(1.0, Vec3::Zero(), Eigen::Quaterniond::Identity())};
  const std::vector<PixelHit> hits{{50, 50, 394.22, 1e8}, {60, 70, 315.70, 1e8 + 20.31}};
  const auto r = reconstruct_from_hits(hits, poses);
  ASSERT_EQ(r.cones.size(), 1u);
  EXPECT_EQ(r.counts.compton, 1u);
  EXPECT_NEAR(r.cones[0].half_angle, scattering_angle(315.70, 394.22), 1e-12);
  EXPECT_NEAR(r.cones[0].origin.x(), 60.5 * 0.055e-3, 1e-12);
}

}  // namespace
}  // namespace radloc::events
