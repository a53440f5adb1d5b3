#include "radloc/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "radloc/errors.hpp"

namespace radloc::sim {

namespace {

using nlohmann::json;

// Reads typed fields out of one JSON object and accumulates every problem
// instead of stopping at the first.
class Section {
 public:
  Section(const json& parent, std::string name, std::vector<std::string>& problems)
      : name_(std::move(name)), problems_(problems) {
    if (name_.empty()) {
      obj_ = &parent;
    } else if (parent.contains(name_)) {
      obj_ = &parent.at(name_);
      if (!obj_->is_object()) {
        problems_.push_back(name_ + ": expected an object");
        obj_ = nullptr;
      }
    }
  }

  void number(const char* key, double& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number()) return bad(key, "expected a number");
    out = v->get<double>();
  }

  void integer(const char* key, int& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number_integer()) return bad(key, "expected an integer");
    out = v->get<int>();
  }

  void unsigned_integer(const char* key, std::uint64_t& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
      return bad(key, "expected a nonnegative integer");
    out = v->get<std::uint64_t>();
  }

  void vec3(const char* key, Vec3& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 3) return bad(key, "expected an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number()) return bad(key, "expected an array of 3 numbers");
      out(static_cast<Eigen::Index>(i)) = (*v)[i].get<double>();
    }
  }

  void optional_number(const char* key, std::optional<double>& out) {
    const json* v = find(key);
    if (!v || v->is_null()) return;
    if (!v->is_number()) return bad(key, "expected a number");
    out = v->get<double>();
  }

  template <typename Enum>
  void choice(const char* key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> options) {
    const json* v = find(key);
    if (!v) return;
    if (v->is_string()) {
      for (const auto& [label, value] : options) {
        if (v->get<std::string>() == label) {
          out = value;
          return;
        }
      }
    }
    std::string allowed;
    for (const auto& [label, value] : options) allowed += std::string(allowed.empty() ? "" : "|") + label;
    bad(key, "expected one of " + allowed);
  }

  // Flags keys not read so far; call after all reads.
  void reject_unknown(std::initializer_list<const char*> sections = {}) {
    if (!obj_) return;
    std::set<std::string> known(seen_.begin(), seen_.end());
    for (const char* s : sections) known.insert(s);
    for (const auto& [key, value] : obj_->items())
      if (!known.count(key)) problems_.push_back(path(key) + ": unknown key");
  }

 private:
  const json* find(const char* key) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }
  void bad(const char* key, const std::string& what) { problems_.push_back(path(key) + ": " + what); }

  const json* obj_ = nullptr;
  std::string name_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

}  // namespace

ScenarioFile parse_scenario(std::string_view json_text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(source, 1, e.what());
  }
  if (!doc.is_object()) throw SchemaError({"top level: expected an object"});

  ScenarioFile out;
  Scenario& s = out.scenario;
  estimator::NoiseConfig& n = out.noise;
  std::vector<std::string> problems;

  Section top(doc, "", problems);
  top.unsigned_integer("seed", s.seed);
  top.number("duration", s.duration);
  top.number("timestep", s.timestep);
  top.choice("mode", s.mode, {{"2d", Mode::Mode2D}, {"3d", Mode::Mode3D}});
  top.reject_unknown({"source", "area", "uav", "detector", "estimator"});

  Section src(doc, "source", problems);
  src.vec3("initial", s.source_initial);
  src.vec3("velocity", s.source_velocity);
  src.number("activity", s.activity);
  src.reject_unknown();

  Section area(doc, "area", problems);
  area.number("x_min", s.area.x_min);
  area.number("x_max", s.area.x_max);
  area.number("y_min", s.area.y_min);
  area.number("y_max", s.area.y_max);
  area.reject_unknown();

  Section uav(doc, "uav", problems);
  uav.choice("program", s.program, {{"search", Program::Search}, {"line", Program::Line}});
  uav.number("speed", s.uav_speed);
  uav.number("max_speed", s.uav_max_speed);
  uav.number("orbit_radius", s.orbit_radius);
  uav.optional_number("sweep_radius", s.sweep_radius);
  uav.number("altitude", s.flight_altitude);
  uav.vec3("line_start", s.line_start);
  uav.vec3("line_direction", s.line_direction);
  uav.reject_unknown();

  Section det(doc, "detector", problems);
  det.number("cone_rate_constant", s.detector.cone_rate_constant);
  det.number("angular_sigma", s.detector.angular_sigma);
  det.number("axis_sigma", s.detector.axis_sigma);
  det.number("background_rate", s.detector.background_rate);
  det.number("min_theta", s.detector.min_theta);
  det.number("max_theta", s.detector.max_theta);
  det.vec3("camera_offset", s.detector.camera_offset);
  det.reject_unknown();

  Section est(doc, "estimator", problems);
  est.number("r", n.r);
  est.number("far_variance", n.far_variance);
  est.number("q", n.q);
  est.number("outlier_gate", n.outlier_gate);
  est.integer("init_cone_count", n.init_cone_count);
  est.number("min_origin_separation", n.min_origin_separation);
  est.number("initial_variance", n.initial_variance);
  est.integer("reset_reuse_count", n.reset_reuse_count);
  est.integer("max_buffer", n.max_buffer);
  est.number("init_residual_gate", n.init_residual_gate);
  est.integer("multistart_count", n.initializer.multistart_count);
  est.number("init_tolerance", n.initializer.tolerance);
  est.integer("max_iterations", n.initializer.max_iterations);
  est.number("degeneracy_threshold", n.initializer.degeneracy_threshold);
  est.number("apex_tolerance", n.initializer.apex_tolerance);
  est.reject_unknown();

  // Range checks run even after key errors so one report lists everything;
  // fields with type errors keep their defaults and pass these checks.
  try {
    s.validate();
  } catch (const SchemaError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  try {
    n.validate();
  } catch (const InvalidInput& e) {
    problems.push_back(std::string("estimator: ") + e.what());
  }
  if (n.initializer.multistart_count < 1) problems.push_back("estimator.multistart_count must be >= 1");
  if (!problems.empty()) throw SchemaError(problems);
  return out;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

}  // namespace radloc::sim
