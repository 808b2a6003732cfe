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

#include <vector>

#include "herding/adjoint.hpp"
#include "herding/dynamics.hpp"
#include "herding/model.hpp"

namespace herding {

struct ArmijoConfig {
  double initial_step = 1.0;
  double shrink = 0.5;       // in (0,1)
  double slope = 1e-4;       // in (0,1)
  int max_backtracks = 40;
};

struct CoarseOptConfig {
  double eps_opt = 5e-3;     // stop when the L2 iterate change drops below this
  int max_iters = 500;
  ArmijoConfig armijo;
  int cg_restart_period = 10;
};

struct CoarseSolution {
  ControlSignal u_opt;
  Trajectory traj;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // initial cost plus one entry per accepted step
};

/// Per dog and per cell, rescales any velocity whose Euclidean norm exceeds
/// u_max back onto the ball of radius u_max.
ControlSignal project_control(const ControlSignal& h, double u_max, int dim);

/// Polak-Ribiere direction with nonnegative beta clamp. Falls back to steepest
/// descent at iter 0, every restart_period iterations, and whenever the
/// conjugate direction fails the descent test <d, -grad> > 0.
GradientField ncg_direction(const GradientField& grad, const GradientField& prev_grad,
                            const GradientField& prev_dir, int iter, int restart_period);

struct LineSearchResult {
  double step = 0.0;
  ControlSignal u;
  double cost = 0.0;
  Trajectory traj;  // trajectory of the accepted iterate, reusable by the caller
};

/// Projected Armijo backtracking: accepts the largest s = initial_step*shrink^k
/// with J(P(u + s d)) <= J(u) - slope/s * ||u - P(u + s d)||^2.
/// Throws LineSearchFailed after max_backtracks rejections.
LineSearchResult armijo_line_search(const ControlSignal& u, const GradientField& direction,
                                    const ReferenceData& ref, const SystemState& y0,
                                    const ModelParams& params, const ArmijoConfig& cfg,
                                    double current_cost);

/// Projected NCG on the deterministic control problem. Stops when the
/// dt-weighted L2 distance between consecutive iterates drops below eps_opt;
/// returns the best iterate with converged=false when max_iters is hit or the
/// line search stalls twice in a row.
CoarseSolution solve_coarse_ocp(const SystemState& y0, const ReferenceData& ref,
                                const ModelParams& params, const CoarseOptConfig& cfg,
                                const ControlSignal& u_init);

/// Same, starting from the zero control.
CoarseSolution solve_coarse_ocp(const SystemState& y0, const ReferenceData& ref,
                                const ModelParams& params, const CoarseOptConfig& cfg);

}  // namespace herding
