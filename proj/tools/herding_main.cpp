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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "herding/errors.hpp"
#include "herding/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void write_diagnostic(const std::string& dir, const std::string& kind, const std::string& what) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(std::filesystem::path(dir) / "error.json");
  out << "{\n  \"error\": \"" << kind << "\",\n  \"message\": \"" << what << "\"\n}\n";
}

int classify(const std::exception& err) {
  if (dynamic_cast<const herding::ParseError*>(&err) ||
      dynamic_cast<const herding::ValidationError*>(&err))
    return kExitConfig;
  if (dynamic_cast<const herding::Error*>(&err)) return kExitNumerical;
  return 1;
}

void print_record(const herding::RunRecord& rec) {
  std::printf("run %-16s sm_iters=%d", rec.name.c_str(), rec.sm_iterations);
  if (rec.l2_error_deterministic)
    std::printf(" l2_det=%.4g", *rec.l2_error_deterministic);
  if (rec.l2_error_space_mapping)
    std::printf(" l2_sm=%.4g", *rec.l2_error_space_mapping);
  if (rec.steering_time) std::printf(" steering_time=%.4g", *rec.steering_time);
  std::printf(" wall=%.1fs\n", rec.wall_time_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-mapping receding-horizon control of stochastic particle herds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string output_dir;
  bool desk_scale = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;

  CLI::App* run = app.add_subcommand("run", "Run a single scenario");
  run->add_option("--config", config_path, "Scenario config file (JSON)");
  run->add_option("--preset", preset_name, "Run a single-scenario preset instead of a config");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--samples", samples, "Override the Monte Carlo sample count");
  run->add_option("--output-dir", output_dir, "Override the output directory");
  run->add_flag("--desk-scale", desk_scale, "Use the reduced preset sizes");

  CLI::App* sweep = app.add_subcommand("sweep", "Run every scenario of a preset study");
  sweep->add_option("--preset", preset_name, "One of: sigma-sweep, dog-sweep, stabilization")
      ->required();
  sweep->add_option("--seed", seed, "Override the scenario seeds");
  sweep->add_option("--samples", samples, "Override the Monte Carlo sample count");
  sweep->add_option("--output-dir", output_dir, "Directory for per-run outputs and table.csv");
  sweep->add_flag("--desk-scale", desk_scale, "Use the reduced preset sizes");

  CLI::App* presets = app.add_subcommand("presets", "Print preset configs as JSON");
  presets->add_option("--preset", preset_name, "Print only this preset");
  presets->add_flag("--desk-scale", desk_scale, "Use the reduced preset sizes");

  CLI11_PARSE(app, argc, argv);

  std::string diagnostic_dir;
  try {
    if (run->parsed()) {
      herding::ScenarioConfig cfg;
      if (!config_path.empty() && !preset_name.empty())
        throw herding::ValidationError("pass either --config or --preset, not both");
      if (!config_path.empty()) {
        cfg = herding::load_config(config_path);
      } else if (!preset_name.empty()) {
        auto configs = herding::make_preset(preset_name, desk_scale);
        if (configs.size() != 1)
          throw herding::ValidationError("preset \"" + preset_name +
                                         "\" is a sweep; use the sweep subcommand");
        cfg = configs.front();
      } else {
        throw herding::ValidationError("run needs --config or --preset");
      }
      if (seed) cfg.seed = *seed;
      if (samples) cfg.sm.n_samples = *samples;
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      diagnostic_dir = cfg.output_dir;
      print_record(herding::run_scenario(cfg));
    } else if (sweep->parsed()) {
      const std::string dir = output_dir.empty() ? "out/" + preset_name : output_dir;
      diagnostic_dir = dir;
      for (const auto& rec : herding::run_preset(preset_name, desk_scale, dir, seed, samples))
        print_record(rec);
    } else if (presets->parsed()) {
      const auto names =
          preset_name.empty() ? herding::preset_names() : std::vector<std::string>{preset_name};
      for (const std::string& name : names)
        for (const auto& cfg : herding::make_preset(name, desk_scale))
          std::cout << herding::serialize_config(cfg);
    }
  } catch (const std::exception& err) {
    const int code = classify(err);
    std::cerr << "error: " << err.what() << "\n";
    if (code == kExitNumerical) write_diagnostic(diagnostic_dir, "numerical", err.what());
    return code;
  }
  return kExitOk;
}
