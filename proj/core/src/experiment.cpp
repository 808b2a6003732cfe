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

#include "herding/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "herding/errors.hpp"
#include "herding/rng.hpp"

namespace herding {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kCoarseOnly: return "coarse-only";
    case RunMode::kAmcsmOpenLoop: return "amcsm-open-loop";
    case RunMode::kRecedingHorizon: return "receding-horizon";
  }
  return "unknown";
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "coarse-only") return RunMode::kCoarseOnly;
  if (name == "amcsm-open-loop") return RunMode::kAmcsmOpenLoop;
  if (name == "receding-horizon") return RunMode::kRecedingHorizon;
  throw ValidationError("mode must be one of coarse-only, amcsm-open-loop, receding-horizon");
}

namespace {

int grid_steps(double span, double dt, const char* field) {
  const double ratio = span / dt;
  const int steps = static_cast<int>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw ValidationError(std::string(field) + " must be a positive multiple of dt");
  return steps;
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(std::string(field) + " " + what);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(schema_version == kSchemaVersion, "schema_version", "is not supported");
  require(!name.empty(), "name", "must not be empty");
  model.validate();
  require(gamma > 0.0, "gamma", "must be > 0");
  require(dt > 0.0, "dt", "must be > 0");
  require(total_t > 0.0, "total_t", "must be > 0");
  grid_steps(total_t, dt, "total_t");
  require(coarse.eps_opt > 0.0, "coarse_opt.eps_opt", "must be > 0");
  require(coarse.max_iters >= 1, "coarse_opt.max_iters", "must be >= 1");
  require(coarse.armijo.initial_step > 0.0, "coarse_opt.armijo.initial_step", "must be > 0");
  require(coarse.armijo.shrink > 0.0 && coarse.armijo.shrink < 1.0,
          "coarse_opt.armijo.shrink", "must lie in (0,1)");
  require(coarse.armijo.slope > 0.0 && coarse.armijo.slope < 1.0, "coarse_opt.armijo.slope",
          "must lie in (0,1)");
  require(coarse.armijo.max_backtracks >= 1, "coarse_opt.armijo.max_backtracks", "must be >= 1");
  require(coarse.cg_restart_period >= 0, "coarse_opt.cg_restart_period", "must be >= 0");
  require(sm.eps_sm > 0.0, "space_mapping.eps_sm", "must be > 0");
  require(sm.max_sm_iters >= 0, "space_mapping.max_sm_iters", "must be >= 0");
  require(sm.rel_gap_stop >= 0.0, "space_mapping.rel_gap_stop", "must be >= 0");
  require(sm.accept_threshold >= 0.0, "space_mapping.accept_threshold", "must be >= 0");
  require(sm.n_samples >= 1, "space_mapping.n_samples", "must be >= 1");
  require(sm.broyden_step_length > 0.0, "space_mapping.broyden_step_length", "must be > 0");
  require(z_des.size() == model.dim, "z_des", "must have dim entries");
  if (steering_tol) require(*steering_tol > 0.0, "steering_tol", "must be > 0");
  require(max_windows >= 1, "max_windows", "must be >= 1");
  for (double t : snapshot_times)
    require(t >= 0.0 && t <= total_t, "snapshot_times", "entries must lie in [0, total_t]");
  if (mode == RunMode::kRecedingHorizon) {
    const int w_steps = grid_steps(window_len, dt, "window_len");
    require(w_steps % 2 == 0, "window_len", "must be an even multiple of dt");
    if (!steering_tol)
      HorizonSchedule::uniform(total_t, window_len, dt);  // validates the tiling
  }
  if (init.generated) {
    require(init.sheep_box_halfwidth >= 0.0, "initial_conditions.sheep_box_halfwidth",
            "must be >= 0");
    require(init.dog_circle_radius >= 0.0, "initial_conditions.dog_circle_radius",
            "must be >= 0");
    require(init.sheep_box_center.size() == model.dim, "initial_conditions.sheep_box_center",
            "must have dim entries");
    if (model.n_dogs > 0) {
      require(model.dim == 2, "initial_conditions", "generator places dogs on a circle, dim must be 2");
      require(init.dog_circle_center.size() == model.dim, "initial_conditions.dog_circle_center",
              "must have dim entries");
    }
  } else {
    require(init.x.rows() == model.n_sheep && init.x.cols() == model.dim,
            "initial_conditions.x", "must be n_sheep rows of dim entries");
    require(init.v.rows() == model.n_sheep && init.v.cols() == model.dim,
            "initial_conditions.v", "must be n_sheep rows of dim entries");
    require(init.a.rows() == model.n_dogs && init.a.cols() == model.dim,
            "initial_conditions.a", "must be n_dogs rows of dim entries");
  }
  require(!output_dir.empty(), "output_dir", "must not be empty");
}

namespace {

void expect_keys(const json& obj, const std::string& path,
                 std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) known = true;
    if (!known)
      throw ValidationError("unknown key \"" + (path.empty() ? item.key() : path + "." + item.key()) +
                            "\"");
  }
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ValidationError(field + " must be an integer");
  return v.get<int>();
}

void read_number(const json& obj, const char* key, const std::string& path, double& out) {
  if (obj.contains(key)) out = as_number(obj.at(key), path + key);
}

void read_int(const json& obj, const char* key, const std::string& path, int& out) {
  if (obj.contains(key)) out = as_int(obj.at(key), path + key);
}

Vector as_vector(const json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field + " must be an array of numbers");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = as_number(v[i], field);
  return out;
}

Matrix as_matrix(const json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field + " must be an array of rows");
  Matrix out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vector row = as_vector(v[i], field);
    if (i == 0) out.resize(v.size(), row.size());
    if (row.size() != out.cols()) throw ValidationError(field + " rows must have equal length");
    out.row(i) = row.transpose();
  }
  return out;
}

json vector_to_json(const Eigen::Ref<const Vector>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vector_to_json(m.row(i).transpose()));
  return arr;
}

PotentialParams parse_potential(const json& obj, const std::string& path) {
  expect_keys(obj, path, {"c_r", "c_a", "l_r", "l_a"});
  PotentialParams p;
  read_number(obj, "c_r", path + ".", p.c_r);
  read_number(obj, "c_a", path + ".", p.c_a);
  read_number(obj, "l_r", path + ".", p.l_r);
  read_number(obj, "l_a", path + ".", p.l_a);
  return p;
}

json potential_to_json(const PotentialParams& p) {
  return json{{"c_r", p.c_r}, {"c_a", p.c_a}, {"l_r", p.l_r}, {"l_a", p.l_a}};
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!root.is_object()) throw ParseError("config root must be a JSON object");

  expect_keys(root, "",
              {"schema_version", "name", "mode", "seed", "model", "gamma", "dt", "total_t",
               "window_len", "coarse_opt", "space_mapping", "z_des", "steering_tol",
               "max_windows", "snapshot_times", "initial_conditions", "output_dir"});

  ScenarioConfig cfg;
  cfg.model.sheep_potential = default_sheep_potential();
  cfg.model.dog_potential = default_dog_potential();

  read_int(root, "schema_version", "", cfg.schema_version);
  if (root.contains("name")) {
    if (!root.at("name").is_string()) throw ValidationError("name must be a string");
    cfg.name = root.at("name").get<std::string>();
  }
  if (root.contains("mode")) {
    if (!root.at("mode").is_string()) throw ValidationError("mode must be a string");
    cfg.mode = run_mode_from_string(root.at("mode").get<std::string>());
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer())
      throw ValidationError("seed must be a nonnegative integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    expect_keys(m, "model",
                {"n_sheep", "n_dogs", "dim", "friction", "noise", "u_max", "sheep_potential",
                 "dog_potential"});
    read_int(m, "n_sheep", "model.", cfg.model.n_sheep);
    read_int(m, "n_dogs", "model.", cfg.model.n_dogs);
    read_int(m, "dim", "model.", cfg.model.dim);
    read_number(m, "friction", "model.", cfg.model.friction);
    read_number(m, "noise", "model.", cfg.model.noise);
    read_number(m, "u_max", "model.", cfg.model.u_max);
    if (m.contains("sheep_potential"))
      cfg.model.sheep_potential = parse_potential(m.at("sheep_potential"), "model.sheep_potential");
    if (m.contains("dog_potential"))
      cfg.model.dog_potential = parse_potential(m.at("dog_potential"), "model.dog_potential");
  }
  read_number(root, "gamma", "", cfg.gamma);
  read_number(root, "dt", "", cfg.dt);
  read_number(root, "total_t", "", cfg.total_t);
  read_number(root, "window_len", "", cfg.window_len);
  bool explicit_initial_step = false;
  if (root.contains("coarse_opt")) {
    const json& c = root.at("coarse_opt");
    expect_keys(c, "coarse_opt", {"eps_opt", "max_iters", "armijo", "cg_restart_period"});
    read_number(c, "eps_opt", "coarse_opt.", cfg.coarse.eps_opt);
    read_int(c, "max_iters", "coarse_opt.", cfg.coarse.max_iters);
    read_int(c, "cg_restart_period", "coarse_opt.", cfg.coarse.cg_restart_period);
    if (c.contains("armijo")) {
      const json& a = c.at("armijo");
      expect_keys(a, "coarse_opt.armijo", {"initial_step", "shrink", "slope", "max_backtracks"});
      explicit_initial_step = a.contains("initial_step");
      read_number(a, "initial_step", "coarse_opt.armijo.", cfg.coarse.armijo.initial_step);
      read_number(a, "shrink", "coarse_opt.armijo.", cfg.coarse.armijo.shrink);
      read_number(a, "slope", "coarse_opt.armijo.", cfg.coarse.armijo.slope);
      read_int(a, "max_backtracks", "coarse_opt.armijo.", cfg.coarse.armijo.max_backtracks);
    }
  }
  if (root.contains("space_mapping")) {
    const json& s = root.at("space_mapping");
    expect_keys(s, "space_mapping",
                {"eps_sm", "max_sm_iters", "rel_gap_stop", "accept_threshold", "n_samples",
                 "broyden_step_length"});
    read_number(s, "eps_sm", "space_mapping.", cfg.sm.eps_sm);
    read_int(s, "max_sm_iters", "space_mapping.", cfg.sm.max_sm_iters);
    read_number(s, "rel_gap_stop", "space_mapping.", cfg.sm.rel_gap_stop);
    read_number(s, "accept_threshold", "space_mapping.", cfg.sm.accept_threshold);
    read_int(s, "n_samples", "space_mapping.", cfg.sm.n_samples);
    read_number(s, "broyden_step_length", "space_mapping.", cfg.sm.broyden_step_length);
  }
  if (root.contains("z_des")) cfg.z_des = as_vector(root.at("z_des"), "z_des");
  if (root.contains("steering_tol"))
    cfg.steering_tol = as_number(root.at("steering_tol"), "steering_tol");
  read_int(root, "max_windows", "", cfg.max_windows);
  if (root.contains("snapshot_times")) {
    cfg.snapshot_times.clear();
    const Vector times = as_vector(root.at("snapshot_times"), "snapshot_times");
    for (Eigen::Index i = 0; i < times.size(); ++i) cfg.snapshot_times.push_back(times(i));
  }
  if (root.contains("initial_conditions")) {
    const json& ic = root.at("initial_conditions");
    expect_keys(ic, "initial_conditions",
                {"type", "sheep_box_center", "sheep_box_halfwidth", "dog_circle_center",
                 "dog_circle_radius", "dog_arc_start_deg", "dog_arc_span_deg", "x", "v", "a"});
    std::string type = "generator";
    if (ic.contains("type")) {
      if (!ic.at("type").is_string())
        throw ValidationError("initial_conditions.type must be a string");
      type = ic.at("type").get<std::string>();
    }
    if (type == "generator") {
      cfg.init.generated = true;
      if (ic.contains("sheep_box_center"))
        cfg.init.sheep_box_center =
            as_vector(ic.at("sheep_box_center"), "initial_conditions.sheep_box_center");
      read_number(ic, "sheep_box_halfwidth", "initial_conditions.",
                  cfg.init.sheep_box_halfwidth);
      if (ic.contains("dog_circle_center"))
        cfg.init.dog_circle_center =
            as_vector(ic.at("dog_circle_center"), "initial_conditions.dog_circle_center");
      read_number(ic, "dog_circle_radius", "initial_conditions.", cfg.init.dog_circle_radius);
      read_number(ic, "dog_arc_start_deg", "initial_conditions.", cfg.init.dog_arc_start_deg);
      read_number(ic, "dog_arc_span_deg", "initial_conditions.", cfg.init.dog_arc_span_deg);
    } else if (type == "explicit") {
      cfg.init.generated = false;
      if (ic.contains("x")) cfg.init.x = as_matrix(ic.at("x"), "initial_conditions.x");
      if (ic.contains("v")) cfg.init.v = as_matrix(ic.at("v"), "initial_conditions.v");
      if (ic.contains("a")) cfg.init.a = as_matrix(ic.at("a"), "initial_conditions.a");
      if (cfg.init.v.rows() == 0 && cfg.init.x.rows() > 0)
        cfg.init.v = Matrix::Zero(cfg.init.x.rows(), cfg.init.x.cols());
    } else {
      throw ValidationError("initial_conditions.type must be \"generator\" or \"explicit\"");
    }
  }
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) throw ValidationError("output_dir must be a string");
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }

  // The Armijo trial step must be on the scale of the inverse control-cost
  // curvature, or the iterate-change stopping rule exits before the solver
  // has moved anywhere. 1/gamma is that scale; an explicit value wins.
  if (!explicit_initial_step && cfg.gamma > 0.0)
    cfg.coarse.armijo.initial_step = 1.0 / cfg.gamma;

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  json root;
  root["schema_version"] = cfg.schema_version;
  root["name"] = cfg.name;
  root["mode"] = to_string(cfg.mode);
  root["seed"] = cfg.seed;
  root["model"] = json{{"n_sheep", cfg.model.n_sheep},
                       {"n_dogs", cfg.model.n_dogs},
                       {"dim", cfg.model.dim},
                       {"friction", cfg.model.friction},
                       {"noise", cfg.model.noise},
                       {"u_max", cfg.model.u_max},
                       {"sheep_potential", potential_to_json(cfg.model.sheep_potential)},
                       {"dog_potential", potential_to_json(cfg.model.dog_potential)}};
  root["gamma"] = cfg.gamma;
  root["dt"] = cfg.dt;
  root["total_t"] = cfg.total_t;
  root["window_len"] = cfg.window_len;
  root["coarse_opt"] = json{{"eps_opt", cfg.coarse.eps_opt},
                            {"max_iters", cfg.coarse.max_iters},
                            {"armijo", json{{"initial_step", cfg.coarse.armijo.initial_step},
                                            {"shrink", cfg.coarse.armijo.shrink},
                                            {"slope", cfg.coarse.armijo.slope},
                                            {"max_backtracks", cfg.coarse.armijo.max_backtracks}}},
                            {"cg_restart_period", cfg.coarse.cg_restart_period}};
  root["space_mapping"] = json{{"eps_sm", cfg.sm.eps_sm},
                               {"max_sm_iters", cfg.sm.max_sm_iters},
                               {"rel_gap_stop", cfg.sm.rel_gap_stop},
                               {"accept_threshold", cfg.sm.accept_threshold},
                               {"n_samples", cfg.sm.n_samples},
                               {"broyden_step_length", cfg.sm.broyden_step_length}};
  root["z_des"] = vector_to_json(cfg.z_des);
  if (cfg.steering_tol) root["steering_tol"] = *cfg.steering_tol;
  root["max_windows"] = cfg.max_windows;
  root["snapshot_times"] = cfg.snapshot_times;
  if (cfg.init.generated) {
    root["initial_conditions"] = json{{"type", "generator"},
                                      {"sheep_box_center", vector_to_json(cfg.init.sheep_box_center)},
                                      {"sheep_box_halfwidth", cfg.init.sheep_box_halfwidth},
                                      {"dog_circle_center", vector_to_json(cfg.init.dog_circle_center)},
                                      {"dog_circle_radius", cfg.init.dog_circle_radius},
                                      {"dog_arc_start_deg", cfg.init.dog_arc_start_deg},
                                      {"dog_arc_span_deg", cfg.init.dog_arc_span_deg}};
  } else {
    root["initial_conditions"] = json{{"type", "explicit"},
                                      {"x", matrix_to_json(cfg.init.x)},
                                      {"v", matrix_to_json(cfg.init.v)},
                                      {"a", matrix_to_json(cfg.init.a)}};
  }
  root["output_dir"] = cfg.output_dir;
  return root.dump(2) + "\n";
}

SystemState make_initial_state(const ScenarioConfig& cfg) {
  SystemState y0;
  const int n = cfg.model.n_sheep;
  const int m = cfg.model.n_dogs;
  const int dim = cfg.model.dim;
  if (!cfg.init.generated) {
    y0.x = cfg.init.x;
    y0.v = cfg.init.v;
    y0.a = cfg.init.a;
    return y0;
  }
  const std::uint64_t key = rng::derive(cfg.seed, seed_lane::kInit, 0);
  y0.x.resize(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d)
      y0.x(i, d) = cfg.init.sheep_box_center(d) +
                   cfg.init.sheep_box_halfwidth *
                       (2.0 * rng::uniform(key, static_cast<std::uint64_t>(i) * dim + d) - 1.0);
  y0.v = Matrix::Zero(n, dim);
  y0.a.resize(m, dim);
  const double to_rad = std::numbers::pi / 180.0;
  const double start = cfg.init.dog_arc_start_deg * to_rad;
  const double span = cfg.init.dog_arc_span_deg * to_rad;
  for (int j = 0; j < m; ++j) {
    const double angle = start + span * (j + 0.5) / std::max(1, m);
    y0.a(j, 0) = cfg.init.dog_circle_center(0) + cfg.init.dog_circle_radius * std::cos(angle);
    y0.a(j, 1) = cfg.init.dog_circle_center(1) + cfg.init.dog_circle_radius * std::sin(angle);
  }
  return y0;
}

double compute_l2_com_error(const Matrix& path_a, const Matrix& path_b, double dt) {
  if (path_a.rows() != path_b.rows() || path_a.cols() != path_b.cols())
    throw GridMismatch("compute_l2_com_error: paths live on different grids");
  double sum = 0.0;
  for (Eigen::Index t = 0; t + 1 < path_a.rows(); ++t)
    sum += dt * (path_a.row(t) - path_b.row(t)).squaredNorm();
  return std::sqrt(sum);
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes files atomically and keeps the manifest of what was written.
class Emitter {
 public:
  explicit Emitter(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_);
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path final_path = fs::path(dir_) / name;
    const fs::path tmp_path = fs::path(dir_) / (name + ".tmp");
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp_path.string());
      out << content;
      if (!out) throw IoError("cannot write " + tmp_path.string());
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) throw IoError("cannot finalize " + final_path.string());
    manifest_.push_back(name);
  }

  const std::vector<std::string>& manifest() const { return manifest_; }

 private:
  std::string dir_;
  std::vector<std::string> manifest_;
};

std::string com_csv(const Matrix& com, const TimeGrid& grid) {
  std::string text = "t";
  for (Eigen::Index d = 0; d < com.cols(); ++d) text += ",com_" + std::to_string(d + 1);
  text += "\n";
  for (Eigen::Index t = 0; t < com.rows(); ++t) {
    text += format_double(grid.time(static_cast<int>(t)));
    for (Eigen::Index d = 0; d < com.cols(); ++d) text += "," + format_double(com(t, d));
    text += "\n";
  }
  return text;
}

std::string dogs_csv(const Trajectory& traj, int n_dogs, int dim) {
  std::string text = "t";
  for (int m = 0; m < n_dogs; ++m)
    for (int d = 0; d < dim; ++d)
      text += ",dog" + std::to_string(m + 1) + "_" + std::to_string(d + 1);
  text += "\n";
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    text += format_double(traj.grid.time(static_cast<int>(t)));
    for (int m = 0; m < n_dogs; ++m)
      for (int d = 0; d < dim; ++d) text += "," + format_double(traj.states[t].a(m, d));
    text += "\n";
  }
  return text;
}

std::string controls_csv(const ControlSignal& u, int n_dogs, int dim) {
  std::string text = "t";
  for (int m = 0; m < n_dogs; ++m)
    for (int d = 0; d < dim; ++d)
      text += ",u" + std::to_string(m + 1) + "_" + std::to_string(d + 1);
  text += "\n";
  for (int t = 0; t < u.grid.n_steps; ++t) {
    text += format_double(u.grid.time(t));
    for (Eigen::Index c = 0; c < u.values.cols(); ++c)
      text += "," + format_double(u.values(t, c));
    text += "\n";
  }
  return text;
}

std::string residuals_csv(const std::vector<WindowReport>& reports) {
  std::string text = "window,sm_iter,residual\n";
  for (const WindowReport& report : reports)
    for (std::size_t i = 0; i < report.residual_history.size(); ++i)
      text += std::to_string(report.index) + "," + std::to_string(i) + "," +
              format_double(report.residual_history[i]) + "\n";
  return text;
}

std::string snapshots_csv(const Trajectory& traj, const std::vector<double>& times) {
  std::string text = "t,kind,index,pos_1,pos_2\n";
  for (double time : times) {
    const int node = static_cast<int>(std::llround(time / traj.grid.dt));
    if (node < 0 || node >= static_cast<int>(traj.states.size())) continue;
    const SystemState& s = traj.states[node];
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      text += format_double(traj.grid.time(node)) + ",sheep," + std::to_string(i);
      for (Eigen::Index d = 0; d < s.x.cols(); ++d) text += "," + format_double(s.x(i, d));
      text += "\n";
    }
    for (Eigen::Index j = 0; j < s.a.rows(); ++j) {
      text += format_double(traj.grid.time(node)) + ",dog," + std::to_string(j);
      for (Eigen::Index d = 0; d < s.a.cols(); ++d) text += "," + format_double(s.a(j, d));
      text += "\n";
    }
  }
  return text;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

json record_to_json(const RunRecord& rec) {
  json j;
  j["name"] = rec.name;
  j["config_hash"] = rec.config_hash;
  j["version"] = rec.version;
  j["wall_time_seconds"] = rec.wall_time_seconds;
  j["sm_iterations"] = rec.sm_iterations;
  j["residual_history"] = rec.residual_history;
  j["l2_error_deterministic"] =
      rec.l2_error_deterministic ? json(*rec.l2_error_deterministic) : json(nullptr);
  j["l2_error_space_mapping"] =
      rec.l2_error_space_mapping ? json(*rec.l2_error_space_mapping) : json(nullptr);
  j["steering_time"] = rec.steering_time ? json(*rec.steering_time) : json(nullptr);
  j["final_cost"] = rec.final_cost;
  j["converged"] = rec.converged;
  j["files"] = rec.files;
  return j;
}

}  // namespace

RunRecord run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto start_time = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.name = cfg.name;
  rec.config_hash = fnv1a_hex(serialize_config(cfg));

  Emitter out(cfg.output_dir);
  out.write("config.json", serialize_config(cfg));

  const SystemState y0 = make_initial_state(cfg);
  ModelParams fine = cfg.model;
  ModelParams coarse = cfg.model;
  coarse.noise = 0.0;
  SpaceMappingConfig sm_cfg = cfg.sm;
  sm_cfg.seed = cfg.seed;

  const int n_dogs = cfg.model.n_dogs;
  const int dim = cfg.model.dim;

  switch (cfg.mode) {
    case RunMode::kCoarseOnly: {
      const TimeGrid grid{0.0, cfg.dt, grid_steps(cfg.total_t, cfg.dt, "total_t")};
      const ReferenceData ref =
          build_reference(y0, cfg.z_des, grid, coarse, cfg.gamma, cfg.coarse);
      const CoarseSolution sol = solve_coarse_ocp(y0, ref, coarse, cfg.coarse);
      out.write("com.csv", com_csv(com_path(sol.traj), grid));
      out.write("dogs.csv", dogs_csv(sol.traj, n_dogs, dim));
      out.write("controls.csv", controls_csv(sol.u_opt, n_dogs, dim));
      out.write("residuals.csv", residuals_csv({}));
      rec.final_cost = sol.cost;
      rec.converged = sol.converged;
      break;
    }
    case RunMode::kAmcsmOpenLoop: {
      const TimeGrid grid{0.0, cfg.dt, grid_steps(cfg.total_t, cfg.dt, "total_t")};
      const ReferenceData ref =
          build_reference(y0, cfg.z_des, grid, coarse, cfg.gamma, cfg.coarse);
      const SpaceMappingResult res = amcsm(y0, fine, ref, sm_cfg, cfg.coarse);
      const Trajectory dog_path = simulate_ode(y0, res.u_f, coarse);
      out.write("com.csv", com_csv(res.mean_com_history.back(), grid));
      out.write("dogs.csv", dogs_csv(dog_path, n_dogs, dim));
      out.write("controls.csv", controls_csv(res.u_f, n_dogs, dim));
      out.write("residuals.csv",
                residuals_csv({WindowReport{0, 0.0, res.iterations, res.residual_history, 0.0}}));
      rec.sm_iterations = res.iterations;
      rec.residual_history = res.residual_history;
      rec.l2_error_deterministic =
          compute_l2_com_error(res.mean_com_history.front(), res.coarse_com, cfg.dt);
      rec.l2_error_space_mapping =
          compute_l2_com_error(res.mean_com_history.back(), res.coarse_com, cfg.dt);
      rec.final_cost = res.coarse_cost;
      break;
    }
    case RunMode::kRecedingHorizon: {
      const HorizonSchedule schedule =
          cfg.steering_tol
              ? HorizonSchedule::open_ended(cfg.window_len, cfg.dt, cfg.max_windows)
              : HorizonSchedule::uniform(cfg.total_t, cfg.window_len, cfg.dt);
      const ClosedLoopResult res = run_receding_horizon(
          y0, cfg.z_des, schedule, fine, sm_cfg, cfg.coarse, cfg.gamma, cfg.steering_tol);
      out.write("com.csv", com_csv(res.plant_com, res.plant_path.grid));
      out.write("dogs.csv", dogs_csv(res.plant_path, n_dogs, dim));
      out.write("controls.csv", controls_csv(res.u_committed, n_dogs, dim));
      out.write("residuals.csv", residuals_csv(res.window_reports));
      if (!cfg.snapshot_times.empty())
        out.write("snapshots.csv", snapshots_csv(res.plant_path, cfg.snapshot_times));
      for (const WindowReport& report : res.window_reports)
        rec.sm_iterations += report.sm_iterations;
      if (!res.window_reports.empty())
        rec.residual_history = res.window_reports.back().residual_history;
      rec.steering_time = res.steering_time;
      rec.converged = res.completed;
      break;
    }
  }

  rec.files = out.manifest();
  rec.files.push_back("summary.json");
  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  out.write("summary.json", record_to_json(rec).dump(2) + "\n");
  return rec;
}

namespace {

ScenarioConfig preset_base(bool desk_scale) {
  ScenarioConfig cfg;
  cfg.model.sheep_potential = default_sheep_potential();
  cfg.model.dog_potential = default_dog_potential();
  cfg.model.friction = 0.5;
  cfg.model.u_max = 5e-2;
  cfg.gamma = 1e-2;
  cfg.dt = 1e-2;
  cfg.coarse.eps_opt = 5e-3;
  cfg.coarse.armijo.initial_step = 1.0 / cfg.gamma;
  cfg.sm.n_samples = desk_scale ? 100 : 100;
  cfg.seed = 2026;
  return cfg;
}

}  // namespace

std::vector<std::string> preset_names() { return {"sigma-sweep", "dog-sweep", "stabilization"}; }

std::vector<ScenarioConfig> make_preset(const std::string& name, bool desk_scale) {
  std::vector<ScenarioConfig> configs;
  if (name == "sigma-sweep") {
    for (double sigma : {0.01, 0.02, 0.03, 0.04}) {
      ScenarioConfig cfg = preset_base(desk_scale);
      cfg.mode = RunMode::kAmcsmOpenLoop;
      cfg.model.n_sheep = desk_scale ? 15 : 30;
      cfg.model.n_dogs = 5;
      cfg.model.noise = sigma;
      cfg.total_t = 20.0;
      cfg.sm.accept_threshold = 0.3;
      cfg.sm.rel_gap_stop = 0.005;
      cfg.sm.max_sm_iters = 6;
      // Dogs start adjacent to the crowd; the dog potential has range 0.5,
      // so a wider circle would leave the control without any authority
      // over a T=20 horizon.
      cfg.init.dog_circle_radius = 1.0;
      cfg.z_des = (Vector(2) << 1.5, 1.5).finished();
      char label[32];
      std::snprintf(label, sizeof label, "sigma-%.2f", sigma);
      cfg.name = label;
      configs.push_back(cfg);
    }
  } else if (name == "dog-sweep") {
    for (int m = 1; m <= 6; ++m) {
      ScenarioConfig cfg = preset_base(desk_scale);
      cfg.mode = RunMode::kRecedingHorizon;
      cfg.model.n_sheep = 20;
      cfg.model.n_dogs = m;
      cfg.model.noise = 0.01;
      cfg.sm.eps_sm = 0.5;
      cfg.sm.accept_threshold = 0.5;
      cfg.sm.max_sm_iters = desk_scale ? 2 : 4;
      cfg.sm.n_samples = desk_scale ? 50 : 100;
      cfg.window_len = 4.0;
      cfg.steering_tol = 0.05;
      cfg.max_windows = desk_scale ? 60 : 500;
      cfg.total_t = cfg.max_windows * 2.0 + 2.0;
      // Tight pack with the dogs on a rear arc at contact range; the push
      // must finish before the pack disperses past the dog-potential range.
      cfg.init.sheep_box_halfwidth = 0.25;
      cfg.init.dog_circle_radius = 0.55;
      cfg.init.dog_arc_start_deg = 180.0;
      cfg.init.dog_arc_span_deg = 90.0;
      cfg.z_des = desk_scale ? (Vector(2) << 0.07, 0.07).finished()
                             : (Vector(2) << 0.15, 0.15).finished();
      cfg.name = "dogs-" + std::to_string(m);
      configs.push_back(cfg);
    }
  } else if (name == "stabilization") {
    ScenarioConfig cfg = preset_base(desk_scale);
    cfg.mode = RunMode::kRecedingHorizon;
    cfg.model.n_sheep = desk_scale ? 6 : 20;
    cfg.model.n_dogs = desk_scale ? 3 : 5;
    cfg.model.noise = 0.01;
    cfg.gamma = 1e-3;
    cfg.coarse.armijo.initial_step = 1.0 / cfg.gamma;
    cfg.sm.eps_sm = 0.5;
    cfg.sm.accept_threshold = 0.5;
    cfg.sm.max_sm_iters = 2;
    cfg.sm.n_samples = desk_scale ? 20 : 100;
    cfg.window_len = 1.0;
    cfg.total_t = desk_scale ? 4.0 : 250.0;
    cfg.z_des = desk_scale ? (Vector(2) << 1.0, 1.0).finished()
                           : (Vector(2) << 5.0, 5.0).finished();
    cfg.init.dog_circle_radius = desk_scale ? 1.0 : 2.0;
    for (double f : {0.04, 0.1, 0.2, 0.3, 0.5, 1.0}) cfg.snapshot_times.push_back(f * cfg.total_t);
    cfg.name = "stabilization";
    configs.push_back(cfg);
  } else {
    throw ValidationError("unknown preset \"" + name + "\"");
  }
  return configs;
}

std::vector<RunRecord> run_preset(const std::string& name, bool desk_scale,
                                  const std::string& output_dir,
                                  std::optional<std::uint64_t> seed_override,
                                  std::optional<int> samples_override) {
  std::vector<ScenarioConfig> configs = make_preset(name, desk_scale);
  std::vector<RunRecord> records;
  for (ScenarioConfig& cfg : configs) {
    if (seed_override) cfg.seed = *seed_override;
    if (samples_override) cfg.sm.n_samples = *samples_override;
    cfg.output_dir = (fs::path(output_dir) / cfg.name).string();
    records.push_back(run_scenario(cfg));
  }

  Emitter out(output_dir);
  if (name == "sigma-sweep") {
    std::string table = "sigma,sm_iterations,l2_error_deterministic,l2_error_space_mapping\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      table += format_double(configs[i].model.noise) + "," +
               std::to_string(records[i].sm_iterations) + "," +
               format_double(records[i].l2_error_deterministic.value_or(0.0)) + "," +
               format_double(records[i].l2_error_space_mapping.value_or(0.0)) + "\n";
    }
    out.write("table.csv", table);
  } else if (name == "dog-sweep") {
    std::string table = "n_dogs,steering_time,completed\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      table += std::to_string(configs[i].model.n_dogs) + "," +
               (records[i].steering_time ? format_double(*records[i].steering_time) : "") + "," +
               (records[i].converged ? "1" : "0") + "\n";
    }
    out.write("table.csv", table);
  } else {
    std::string table = "name,steering_time,sm_iterations\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      table += records[i].name + "," +
               (records[i].steering_time ? format_double(*records[i].steering_time) : "") + "," +
               std::to_string(records[i].sm_iterations) + "\n";
    }
    out.write("table.csv", table);
  }
  return records;
}

}  // namespace herding
