#include "radloc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "radloc/csv_io.hpp"
#include "radloc/errors.hpp"
#include "radloc/estimator.hpp"
#include "radloc/event_pipeline.hpp"
#include "radloc/log.hpp"
#include "radloc/scenario_io.hpp"
#include "radloc/simulator.hpp"

namespace radloc::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json ToJson(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json ToJson(const Mat3& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(ordered_json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

template <typename T>
ordered_json Maybe(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, Vec3>) {
    return ToJson(*v);
  } else {
    return *v;
  }
}

ordered_json ToJson(const estimator::InitAttempt& a) {
  ordered_json j;
  j["t_s"] = a.timestamp;
  j["cones"] = a.cone_count;
  j["accepted"] = a.accepted;
  j["degenerate"] = a.degenerate;
  j["reason"] = a.reason;
  if (a.solution) {
    const auto& s = *a.solution;
    // inf is not representable in JSON; a null condition means unbounded.
    j["solution"] = {{"p", ToJson(s.p)},
                     {"cost", s.cost},
                     {"condition", std::isfinite(s.condition) ? ordered_json(s.condition) : ordered_json(nullptr)},
                     {"degenerate", s.degenerate},
                     {"iterations", s.iterations}};
  } else {
    j["solution"] = nullptr;
  }
  return j;
}

void WriteJson(const fs::path& path, const ordered_json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

fs::path PrepareOut(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// --- reconstruct ----------------------------------------------------------

struct ReconstructArgs {
  std::string events, poses, out;
  double window_ns = 86.0;
  double threshold_kev = 800.0;
  std::optional<double> duration;
  bool both_roles = false;
};

int Reconstruct(const ReconstructArgs& a, std::ostream& out) {
  const io::CsvTable event_table = io::read_csv(a.events);
  const std::vector<Pose> poses = io::poses_from_table(io::read_csv(a.poses));

  events::ReconstructionConfig config;
  config.constants.coincidence_window_ns = a.window_ns;
  config.background_threshold_kev = a.threshold_kev;
  if (a.both_roles) config.roles = events::RoleAssignment::BothHypotheses;

  events::ReconstructionResult result;
  if (io::detect_event_kind(event_table) == io::EventFileKind::Hits) {
    const auto hits = io::hits_from_table(event_table);
    result = events::reconstruct_from_hits(hits, poses, config);
  } else {
    const auto pairs = io::pairs_from_table(event_table);
    result = events::reconstruct_from_pairs(pairs, poses, config);
  }
  if (result.counts.outside_pose_range > 0)
    log::warn(std::to_string(result.counts.outside_pose_range) +
              " events outside the pose time range were skipped");

  double duration = 0.0;
  if (a.duration) {
    duration = *a.duration;
  } else if (poses.size() >= 2) {
    duration = poses.back().timestamp - poses.front().timestamp;
  }

  const fs::path dir = PrepareOut(a.out);
  io::write_file_atomic(dir / "cones.csv", io::cones_to_csv(result.cones));
  const std::string table = events::format_statistics_table(result.counts, duration);
  io::write_file_atomic(dir / "statistics.txt", table);

  ordered_json j;
  j["duration_s"] = duration;
  j["cones"] = result.cones.size();
  ordered_json classes = ordered_json::array();
  for (const auto& s : events::class_statistics(result.counts, duration)) {
    classes.push_back({{"class", std::string(events::to_string(s.event_class))},
                       {"count", s.count},
                       {"rate_per_s", s.rate_per_s},
                       {"share", s.share}});
  }
  j["classes"] = classes;
  j["rejected_pairs"] = result.counts.rejected_pairs;
  j["degenerate_pairs"] = result.counts.degenerate_pairs;
  j["ambiguous_tracks"] = result.counts.ambiguous_tracks;
  j["outside_pose_range"] = result.counts.outside_pose_range;
  WriteJson(dir / "summary.json", j);

  out << table;
  return kOk;
}

// --- estimate -------------------------------------------------------------

struct EstimateArgs {
  std::string cones, out, mode = "3d";
  estimator::NoiseConfig noise;
  std::uint64_t seed = 0;
};

int Estimate(const EstimateArgs& a, std::ostream& out) {
  const std::vector<Cone> cones = io::cones_from_table(io::read_csv(a.cones));
  for (const auto& c : cones)
    if (c.frame != Frame::World) throw InvalidInput("estimate requires world-frame cones");

  estimator::NoiseConfig noise = a.noise;
  noise.initializer.seed = a.seed;
  estimator::SourceEstimator est(noise, a.mode == "2d" ? Mode::Mode2D : Mode::Mode3D);

  std::vector<io::EstimateRow> rows;
  rows.reserve(cones.size());
  std::optional<double> init_time;
  int corrected = 0, rejected = 0;
  for (const auto& c : cones) {
    const auto r = est.ingest(c);
    io::EstimateRow row;
    row.t = c.timestamp;
    if (r.state.status == estimator::Status::Tracking) {
      row.x = r.state.x;
      row.omega = r.state.omega;
    }
    row.status = estimator::to_string(r.state.status);
    row.action = estimator::to_string(r.action);
    rows.push_back(std::move(row));
    if (r.action == estimator::Action::Initialized && !init_time) init_time = c.timestamp;
    if (r.action == estimator::Action::Corrected) ++corrected;
    if (r.action == estimator::Action::Rejected || r.action == estimator::Action::Reset) ++rejected;
  }

  const fs::path dir = PrepareOut(a.out);
  io::write_file_atomic(dir / "estimates.csv", io::estimates_to_csv(rows));

  const auto& state = est.state();
  const bool tracking = state.status == estimator::Status::Tracking;
  ordered_json j;
  j["status"] = tracking ? "tracking" : "uninitialized";
  j["cones"] = cones.size();
  j["init_time_s"] = Maybe(init_time);
  j["final_hypothesis"] = tracking ? ToJson(state.x) : ordered_json(nullptr);
  j["final_covariance"] = tracking ? ToJson(state.omega) : ordered_json(nullptr);
  j["corrections"] = corrected;
  j["rejections"] = rejected;
  j["resets"] = est.reset_count();
  ordered_json attempts = ordered_json::array();
  for (const auto& at : est.init_attempts()) attempts.push_back(ToJson(at));
  j["init_attempts"] = attempts;
  WriteJson(dir / "summary.json", j);

  out << "status: " << j["status"].get<std::string>() << ", cones: " << cones.size()
      << ", resets: " << est.reset_count() << "\n";
  if (tracking)
    out << "hypothesis: " << io::format_double(state.x.x()) << " " << io::format_double(state.x.y())
        << " " << io::format_double(state.x.z()) << "\n";
  return kOk;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string scenario, out;
  std::optional<std::uint64_t> seed;
};

std::string StepsCsv(const sim::SimulationReport& report) {
  std::string s = "t_s,truth_x,truth_y,truth_z,est_x,est_y,est_z,err_m,phase,action\n";
  for (const auto& st : report.steps) {
    s += io::format_double(st.t);
    for (int k = 0; k < 3; ++k) s += "," + io::format_double(st.truth(k));
    if (st.estimate) {
      for (int k = 0; k < 3; ++k) s += "," + io::format_double((*st.estimate)(k));
      s += "," + io::format_double((*st.estimate - st.truth).norm());
    } else {
      s += ",,,,";
    }
    s += std::string(",") + sim::to_string(st.phase) + "," + st.action + "\n";
  }
  return s;
}

std::string TruthCsv(const sim::SimulationReport& report) {
  std::string s = "t_s,x,y,z\n";
  for (const auto& st : report.steps) {
    s += io::format_double(st.t);
    for (int k = 0; k < 3; ++k) s += "," + io::format_double(st.truth(k));
    s += "\n";
  }
  return s;
}

int Simulate(const SimulateArgs& a, std::ostream& out) {
  sim::ScenarioFile file = sim::load_scenario(a.scenario);
  if (a.seed) file.scenario.seed = *a.seed;
  const sim::SimulationReport report = sim::run_scenario(file.scenario, file.noise);
  const sim::Summary summary = sim::metrics(report);

  std::vector<Cone> cones;
  std::vector<io::EstimateRow> rows;
  for (const auto& c : report.cones) {
    cones.push_back(c.sampled.cone);
    io::EstimateRow row;
    row.t = c.sampled.cone.timestamp;
    if (c.estimate) {
      row.x = c.estimate;
      row.omega = c.omega;
    }
    row.status = estimator::to_string(c.status);
    row.action = estimator::to_string(c.action);
    rows.push_back(std::move(row));
  }

  const fs::path dir = PrepareOut(a.out);
  io::write_file_atomic(dir / "steps.csv", StepsCsv(report));
  io::write_file_atomic(dir / "truth.csv", TruthCsv(report));
  io::write_file_atomic(dir / "cones.csv", io::cones_to_csv(cones));
  io::write_file_atomic(dir / "estimates.csv", io::estimates_to_csv(rows));

  ordered_json j;
  j["seed"] = file.scenario.seed;
  j["duration_s"] = summary.duration;
  j["time_to_init_s"] = Maybe(summary.time_to_init);
  j["ever_tracked"] = summary.ever_tracked;
  j["degenerate_init"] = summary.degenerate_init;
  j["init_attempts"] = summary.init_attempts;
  j["resets"] = summary.resets;
  j["source_cones"] = summary.source_cones;
  j["background_cones"] = summary.background_cones;
  j["source_cone_rate_per_s"] = summary.source_cone_rate;
  j["background_cone_rate_per_s"] = summary.background_cone_rate;
  j["accepted_corrections"] = summary.accepted_corrections;
  j["rejected_cones"] = summary.rejected_cones;
  j["acceptance_rate"] = summary.acceptance_rate;
  j["post_lock_mean_error_m"] = Maybe(summary.post_lock_mean_error);
  j["post_lock_mean_planar_error_m"] = Maybe(summary.post_lock_mean_planar_error);
  j["post_lock_max_error_m"] = Maybe(summary.post_lock_max_error);
  j["final_estimate"] = Maybe(summary.final_estimate);
  ordered_json transitions = ordered_json::array();
  for (const auto& t : report.transitions)
    transitions.push_back({{"t_s", t.t}, {"phase", sim::to_string(t.phase)}, {"center", ToJson(t.center)}});
  j["phase_transitions"] = transitions;
  ordered_json attempts = ordered_json::array();
  for (const auto& at : report.init_attempts) attempts.push_back(ToJson(at));
  j["init_attempt_log"] = attempts;
  WriteJson(dir / "summary.json", j);

  out << "simulated " << io::format_double(summary.duration) << " s, " << report.cones.size()
      << " cones, " << (summary.ever_tracked ? "tracking reached" : "never tracked")
      << (summary.degenerate_init ? ", degenerate initialization reported" : "") << "\n";
  return kOk;
}

// --- metrics --------------------------------------------------------------

struct MetricsArgs {
  std::string estimates, truth, out;
  double threshold = 1.0;
};

int Metrics(const MetricsArgs& a, std::ostream& out) {
  const auto rows = io::estimates_from_table(io::read_csv(a.estimates));
  const auto truth = io::truth_from_table(io::read_csv(a.truth));

  std::string csv = "t_s,err_x,err_y,err_z,err_m\n";
  Vec3 sum_abs = Vec3::Zero();
  double sum = 0.0, max_err = 0.0;
  int n = 0;
  int corrections = 0;
  std::optional<double> first_cross_t;
  std::optional<int> first_cross_corrections;
  std::optional<double> settled_t;
  for (const auto& r : rows) {
    if (r.action == "corrected") ++corrections;
    if (!r.x) continue;
    const auto tr = io::interpolate_truth(truth, r.t);
    if (!tr) continue;
    const Vec3 e = *r.x - *tr;
    const double m = e.norm();
    csv += io::format_double(r.t);
    for (int k = 0; k < 3; ++k) csv += "," + io::format_double(e(k));
    csv += "," + io::format_double(m) + "\n";
    sum_abs += e.cwiseAbs();
    sum += m;
    max_err = std::max(max_err, m);
    ++n;
    if (m <= a.threshold) {
      if (!first_cross_t) {
        first_cross_t = r.t;
        first_cross_corrections = corrections;
      }
      if (!settled_t) settled_t = r.t;
    } else {
      settled_t.reset();
    }
  }
  if (n == 0) throw InvalidInput("estimates and truth share no time range with a hypothesis");

  const fs::path dir = PrepareOut(a.out);
  io::write_file_atomic(dir / "errors.csv", csv);
  ordered_json j;
  j["samples"] = n;
  j["mean_error_m"] = sum / n;
  j["max_error_m"] = max_err;
  j["mean_abs_error_m"] = ToJson(Vec3(sum_abs / n));
  j["threshold_m"] = a.threshold;
  j["first_within_threshold_t_s"] = Maybe(first_cross_t);
  j["corrections_at_first_within_threshold"] = Maybe(first_cross_corrections);
  j["settled_within_threshold_t_s"] = Maybe(settled_t);
  WriteJson(dir / "metrics.json", j);

  out << "samples: " << n << ", mean error: " << io::format_double(sum / n)
      << " m, max error: " << io::format_double(max_err) << " m\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compton camera source localization toolkit", "radloc"};
  app.require_subcommand(1);

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Reconstruct world-frame cones from detector events");
  rec_cmd->add_option("--events", rec.events, "Hit or pair CSV")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--poses", rec.poses, "Pose CSV")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--out", rec.out, "Output directory")->required();
  rec_cmd->add_option("--window-ns", rec.window_ns, "Coincidence window in ns")->capture_default_str();
  rec_cmd->add_option("--threshold-kev", rec.threshold_kev, "Background energy threshold")->capture_default_str();
  rec_cmd->add_option("--duration", rec.duration, "Acquisition time in s (default: pose span)");
  rec_cmd->add_flag("--both-roles", rec.both_roles, "Emit a cone for each electron/photon assignment");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Run the estimator over a world-frame cone CSV");
  est_cmd->add_option("--cones", est.cones, "Cone CSV")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--out", est.out, "Output directory")->required();
  est_cmd->add_option("--mode", est.mode, "Estimation domain")->check(CLI::IsMember({"2d", "3d"}))->capture_default_str();
  est_cmd->add_option("--r", est.noise.r, "Correction-direction variance, m^2")->capture_default_str();
  est_cmd->add_option("--q", est.noise.q, "Process noise per cone, m^2")->capture_default_str();
  est_cmd->add_option("--gate", est.noise.outlier_gate, "Outlier gate")->capture_default_str();
  est_cmd->add_option("--init-count", est.noise.init_cone_count, "Cones for initialization")->capture_default_str();
  est_cmd->add_option("--seed", est.seed, "Initializer seed")->capture_default_str();

  SimulateArgs simargs;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation scenario");
  sim_cmd->add_option("--scenario", simargs.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", simargs.out, "Output directory")->required();
  sim_cmd->add_option("--seed", simargs.seed, "Override the scenario seed");

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "Compare estimates against a truth track");
  met_cmd->add_option("--estimates", met.estimates, "Estimate CSV")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--truth", met.truth, "Truth CSV t_s,x,y,z")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--out", met.out, "Output directory")->required();
  met_cmd->add_option("--threshold", met.threshold, "Convergence threshold, m")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseError;
  }

  try {
    if (*rec_cmd) return Reconstruct(rec, out);
    if (*est_cmd) {
      est.noise.validate();
      return Estimate(est, out);
    }
    if (*sim_cmd) return Simulate(simargs, out);
    if (*met_cmd) return Metrics(met, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kSchemaError;
  } catch (const OrderingError& e) {
    err << "ordering error: " << e.what() << "\n";
    return kOrderingError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace radloc::cli
