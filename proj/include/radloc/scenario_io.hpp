#pragma once

// JSON scenario documents for the simulator.
//
//   {
//     "seed": 0, "duration": 300, "timestep": 0.1, "mode": "2d" | "3d",
//     "source":   { "initial": [x, y, z], "velocity": [vx, vy, vz], "activity": Bq },
//     "area":     { "x_min", "x_max", "y_min", "y_max" },
//     "uav":      { "program": "search" | "line", "speed", "max_speed", "orbit_radius",
//                   "sweep_radius", "altitude", "line_start": [..], "line_direction": [..] },
//     "detector": { "cone_rate_constant", "angular_sigma", "axis_sigma", "background_rate",
//                   "min_theta", "max_theta", "camera_offset": [..] },
//     "estimator": { "r", "far_variance", "q", "outlier_gate", "init_cone_count",
//                    "min_origin_separation", "initial_variance", "reset_reuse_count",
//                    "max_buffer", "init_residual_gate", "multistart_count", "init_tolerance", "max_iterations",
//                    "degeneracy_threshold", "apex_tolerance" }
//   }
//
// Every key is optional and falls back to the library default. Unknown keys,
// wrong types and out-of-range values are all reported in one SchemaError.

#include <filesystem>
#include <string_view>

#include "radloc/estimator.hpp"
#include "radloc/simulator.hpp"

namespace radloc::sim {

struct ScenarioFile {
  Scenario scenario;
  estimator::NoiseConfig noise;
};

ScenarioFile parse_scenario(std::string_view json_text, const std::string& source = "<scenario>");
ScenarioFile load_scenario(const std::filesystem::path& path);

}  // namespace radloc::sim
