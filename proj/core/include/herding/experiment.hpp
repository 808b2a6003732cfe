// Copyright 2026 The herding authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "herding/coarse_opt.hpp"
#include "herding/horizon.hpp"
#include "herding/model.hpp"
#include "herding/space_mapping.hpp"

namespace herding {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum class RunMode { kCoarseOnly, kAmcsmOpenLoop, kRecedingHorizon };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

/// Explicit state arrays, or the documented generator: sheep uniform in a box,
/// dogs equally spaced on a circular arc, all velocities zero. The default
/// arc is the full circle; a partial arc places the dogs behind the crowd,
/// which is how the steering studies position them.
struct InitialConditions {
  bool generated = true;
  Matrix x, v, a;  // explicit arrays when generated == false
  Vector sheep_box_center = Vector::Zero(2);
  double sheep_box_halfwidth = 0.5;
  Vector dog_circle_center = Vector::Zero(2);
  double dog_circle_radius = 2.0;
  double dog_arc_start_deg = 0.0;
  double dog_arc_span_deg = 360.0;
};

/// Everything one run needs; load_config fills unspecified fields with the
/// experiment defaults and rejects unknown keys.
struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string name = "scenario";
  RunMode mode = RunMode::kAmcsmOpenLoop;
  std::uint64_t seed = 1;
  ModelParams model;
  double gamma = 1e-2;
  double dt = 1e-2;
  double total_t = 20.0;
  double window_len = 1.0;
  CoarseOptConfig coarse;
  SpaceMappingConfig sm;
  Vector z_des = (Vector(2) << 5.0, 5.0).finished();
  std::optional<double> steering_tol;
  int max_windows = 2000;
  std::vector<double> snapshot_times;
  InitialConditions init;
  std::string output_dir = "out";

  void validate() const;  // throws ValidationError naming the field
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& json_text);
std::string serialize_config(const ScenarioConfig& cfg);

/// Initial state from the config (explicit arrays or the seeded generator).
SystemState make_initial_state(const ScenarioConfig& cfg);

/// Summary of one finished run; written to summary.json in the output dir.
/// Every CSV the run emits is byte-determined by (config, seed); the wall
/// time lives only here.
struct RunRecord {
  std::string name;
  std::string config_hash;
  std::string version = kVersion;
  double wall_time_seconds = 0.0;
  int sm_iterations = 0;
  std::vector<double> residual_history;
  std::optional<double> l2_error_deterministic;
  std::optional<double> l2_error_space_mapping;
  std::optional<double> steering_time;
  double final_cost = 0.0;
  bool converged = true;
  std::vector<std::string> files;  // manifest of emitted files
};

/// Runs one scenario end to end and writes its outputs under cfg.output_dir.
RunRecord run_scenario(const ScenarioConfig& cfg);

/// dt-weighted discrete L2 norm of the difference of two paths on one grid.
double compute_l2_com_error(const Matrix& path_a, const Matrix& path_b, double dt);

/// Preset scenario batches mirroring the three studies. desk_scale shrinks
/// them to sizes that finish quickly on one core.
std::vector<std::string> preset_names();
std::vector<ScenarioConfig> make_preset(const std::string& name, bool desk_scale);

/// Runs every scenario of a preset sequentially and writes a combined
/// table.csv plus per-run directories under output_dir.
std::vector<RunRecord> run_preset(const std::string& name, bool desk_scale,
                                  const std::string& output_dir,
                                  std::optional<std::uint64_t> seed_override,
                                  std::optional<int> samples_override);

}  // namespace herding
