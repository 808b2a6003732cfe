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

#include <optional>
#include <vector>

#include "herding/coarse_opt.hpp"
#include "herding/dynamics.hpp"
#include "herding/model.hpp"
#include "herding/space_mapping.hpp"

namespace herding {

/// Uniform sliding-window schedule. Window k spans
/// [k*commit_len, k*commit_len + window_len]; only its first half is kept,
/// except that the final window of a fixed-span run commits in full so the
/// committed control covers [0, total_t] without gap or overlap.
struct HorizonSchedule {
  double total_t = 0.0;
  int n_windows = 0;
  double window_len = 1.0;
  double commit_len = 0.5;  // window_len / 2
  double grid_dt = 1e-2;

  int window_steps() const;
  int commit_steps() const;

  /// Fixed-span schedule covering [0, total_t]; throws ValidationError when
  /// window_len is not an even multiple of grid_dt or does not tile total_t.
  static HorizonSchedule uniform(double total_t, double window_len, double grid_dt);

  /// Open-ended schedule for runs that stop on a steering criterion;
  /// n_windows acts as a safety cap.
  static HorizonSchedule open_ended(double window_len, double grid_dt, int max_windows);
};

struct WindowReport {
  int index = 0;
  double start_time = 0.0;
  int sm_iterations = 0;
  std::vector<double> residual_history;
  double coarse_cost = 0.0;
};

struct ClosedLoopResult {
  ControlSignal u_committed;           // stitched control over the committed span
  Trajectory plant_path;               // the plant sample path that carried the loop
  Matrix plant_com;                    // its sheep center of mass per node
  std::vector<WindowReport> window_reports;
  std::optional<double> steering_time; // first commit boundary within steering_tol
  bool completed = true;               // false on window failure or cap exhaustion
};

/// Straight-line tracking reference from the state's center of mass to z_des
/// across the window, with a zero reference control.
ReferenceData provisional_reference(const SystemState& window_start_state,
                                    const Eigen::Ref<const Vector>& z_des,
                                    const TimeGrid& window, const ModelParams& params,
                                    double gamma);

/// Builds the tracking reference for one window: linearly interpolates from
/// the current center of mass to z_des, solves the coarse problem against
/// that line (zero reference control), and returns the optimizer's
/// center-of-mass path as the reference the space mapping should track.
ReferenceData build_reference(const SystemState& window_start_state,
                              const Eigen::Ref<const Vector>& z_des, const TimeGrid& window,
                              const ModelParams& params, double gamma,
                              const CoarseOptConfig& solver_cfg);

/// Concatenates control segments that abut exactly on the global grid.
ControlSignal stitch_controls(const std::vector<ControlSignal>& segments);

/// Receding-horizon closed loop. Each window builds its reference, runs the
/// space mapping, commits the first half of the window control, and advances
/// a single designated plant sample path to the commit boundary; planning
/// ensembles and the plant use separate seed streams derived per window from
/// sm_cfg.seed. With steering_tol set, the loop runs open-ended and stops at
/// the first commit boundary where |com - z_des| < steering_tol.
ClosedLoopResult run_receding_horizon(const SystemState& y0,
                                      const Eigen::Ref<const Vector>& z_des,
                                      const HorizonSchedule& schedule,
                                      const ModelParams& params_fine,
                                      const SpaceMappingConfig& sm_cfg,
                                      const CoarseOptConfig& solver_cfg, double gamma,
                                      std::optional<double> steering_tol = std::nullopt);

}  // namespace herding
