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

#include "herding/horizon.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "herding/errors.hpp"
#include "herding/rng.hpp"

namespace herding {

namespace {

int steps_of(double span, double dt, const char* field) {
  const double ratio = span / dt;
  const int steps = static_cast<int>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw ValidationError(std::string(field) + " must be a positive multiple of grid_dt");
  return steps;
}

}  // namespace

int HorizonSchedule::window_steps() const { return steps_of(window_len, grid_dt, "window_len"); }

int HorizonSchedule::commit_steps() const { return window_steps() / 2; }

HorizonSchedule HorizonSchedule::uniform(double total_t, double window_len, double grid_dt) {
  HorizonSchedule s;
  s.total_t = total_t;
  s.window_len = window_len;
  s.commit_len = window_len / 2.0;
  s.grid_dt = grid_dt;
  const int w_steps = steps_of(window_len, grid_dt, "window_len");
  if (w_steps % 2 != 0) throw ValidationError("window_len must be an even multiple of grid_dt");
  const int total_steps = steps_of(total_t, grid_dt, "total_t");
  const int c_steps = w_steps / 2;
  if (total_steps % c_steps != 0)
    throw ValidationError("total_t must be a multiple of half the window length");
  const int chunks = total_steps / c_steps;
  if (chunks < 2) throw ValidationError("total_t must cover at least one full window");
  s.n_windows = chunks - 1;  // the final window commits both halves
  return s;
}

HorizonSchedule HorizonSchedule::open_ended(double window_len, double grid_dt, int max_windows) {
  HorizonSchedule s;
  s.window_len = window_len;
  s.commit_len = window_len / 2.0;
  s.grid_dt = grid_dt;
  const int w_steps = steps_of(window_len, grid_dt, "window_len");
  if (w_steps % 2 != 0) throw ValidationError("window_len must be an even multiple of grid_dt");
  if (max_windows < 1) throw ValidationError("max_windows must be >= 1");
  s.n_windows = max_windows;
  s.total_t = max_windows * s.commit_len + s.commit_len;
  return s;
}

ReferenceData provisional_reference(const SystemState& window_start_state,
                                    const Eigen::Ref<const Vector>& z_des,
                                    const TimeGrid& window, const ModelParams& params,
                                    double gamma) {
  const Vector com = window_start_state.center_of_mass();
  const int n = window.n_steps;

  ReferenceData provisional;
  provisional.z_bar.resize(n + 1, params.dim);
  provisional.z_bar.row(0) = com.transpose();
  for (int j = 1; j < n; ++j) {
    const double w = static_cast<double>(j) / static_cast<double>(n);
    provisional.z_bar.row(j) = ((1.0 - w) * com + w * z_des).transpose();
  }
  provisional.z_bar.row(n) = z_des.transpose();
  provisional.u_bar = ControlSignal::zero(window, params.n_dogs, params.dim);
  provisional.z_des = z_des;
  provisional.gamma = gamma;
  return provisional;
}

ReferenceData build_reference(const SystemState& window_start_state,
                              const Eigen::Ref<const Vector>& z_des, const TimeGrid& window,
                              const ModelParams& params, double gamma,
                              const CoarseOptConfig& solver_cfg) {
  const ReferenceData provisional =
      provisional_reference(window_start_state, z_des, window, params, gamma);

  ModelParams coarse = params;
  coarse.noise = 0.0;
  const CoarseSolution sol = solve_coarse_ocp(window_start_state, provisional, coarse, solver_cfg);

  ReferenceData ref = provisional;
  ref.z_bar = com_path(sol.traj);
  return ref;
}

ControlSignal stitch_controls(const std::vector<ControlSignal>& segments) {
  if (segments.empty()) throw GridMismatch("stitch_controls: no segments");
  const double dt = segments.front().grid.dt;
  const auto cols = segments.front().values.cols();
  int total_steps = 0;
  long long expected_index = std::llround(segments.front().grid.t0 / dt);
  for (const ControlSignal& seg : segments) {
    if (seg.grid.dt != dt || seg.values.cols() != cols)
      throw GridMismatch("stitch_controls: segment cell shape differs");
    const long long start_index = std::llround(seg.grid.t0 / dt);
    if (start_index != expected_index)
      throw GridMismatch("stitch_controls: segments do not abut on the grid");
    expected_index += seg.grid.n_steps;
    total_steps += seg.grid.n_steps;
  }

  ControlSignal out;
  out.grid = TimeGrid{segments.front().grid.t0, dt, total_steps};
  out.values.resize(total_steps, cols);
  int row = 0;
  for (const ControlSignal& seg : segments) {
    out.values.middleRows(row, seg.grid.n_steps) = seg.values;
    row += seg.grid.n_steps;
  }
  return out;
}

ClosedLoopResult run_receding_horizon(const SystemState& y0,
                                      const Eigen::Ref<const Vector>& z_des,
                                      const HorizonSchedule& schedule,
                                      const ModelParams& params_fine,
                                      const SpaceMappingConfig& sm_cfg,
                                      const CoarseOptConfig& solver_cfg, double gamma,
                                      std::optional<double> steering_tol) {
  const int w_steps = schedule.window_steps();
  const int c_steps = schedule.commit_steps();
  const double dt = schedule.grid_dt;
  const bool steering = steering_tol.has_value();

  ClosedLoopResult result;
  std::vector<ControlSignal> committed;
  SystemState plant = y0;
  std::vector<SystemState> plant_states{plant};

  if (steering && (plant.center_of_mass() - z_des).norm() < *steering_tol)
    result.steering_time = 0.0;

  int k = 0;
  for (; !result.steering_time && k < schedule.n_windows; ++k) {
    const TimeGrid window{static_cast<double>(k) * c_steps * dt, dt, w_steps};
    const bool last_fixed_window = !steering && k == schedule.n_windows - 1;
    const int commit_now = last_fixed_window ? w_steps : c_steps;

    try {
      const ReferenceData ref =
          build_reference(plant, z_des, window, params_fine, gamma, solver_cfg);

      SpaceMappingConfig window_cfg = sm_cfg;
      window_cfg.seed = rng::derive(sm_cfg.seed, seed_lane::kWindow, k);
      const SpaceMappingResult sm = amcsm(plant, params_fine, ref, window_cfg, solver_cfg);

      ControlSignal half;
      half.grid = TimeGrid{window.t0, dt, commit_now};
      half.values = sm.u_f.values.topRows(commit_now);
      committed.push_back(half);

      const std::uint64_t plant_seed = rng::derive(sm_cfg.seed, seed_lane::kPlant, k);
      const Trajectory advance = simulate_sde(plant, half, params_fine, plant_seed);
      for (int t = 1; t <= commit_now; ++t) plant_states.push_back(advance.states[t]);
      plant = plant_states.back();

      result.window_reports.push_back({k, window.t0, sm.iterations, sm.residual_history,
                                       sm.coarse_cost});
    } catch (const Error&) {
      result.completed = false;
      break;
    }

    if (steering && (plant.center_of_mass() - z_des).norm() < *steering_tol)
      result.steering_time = window.t0 + commit_now * dt;
  }
  if (steering && !result.steering_time && result.completed)
    result.completed = false;  // cap exhausted before reaching the destination

  if (committed.empty()) {
    result.u_committed = ControlSignal::zero(TimeGrid{0.0, dt, 0}, params_fine.n_dogs,
                                             params_fine.dim);
  } else {
    result.u_committed = stitch_controls(committed);
  }
  result.plant_path.states = std::move(plant_states);
  result.plant_path.grid =
      TimeGrid{0.0, dt, static_cast<int>(result.plant_path.states.size()) - 1};
  result.plant_com = com_path(result.plant_path);
  return result;
}

}  // namespace herding
