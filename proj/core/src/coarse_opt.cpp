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

#include "herding/coarse_opt.hpp"

#include <cmath>
#include <utility>

#include "herding/errors.hpp"

namespace herding {

ControlSignal project_control(const ControlSignal& h, double u_max, int dim) {
  if (!(u_max > 0.0)) throw ValidationError("project_control: u_max must be > 0");
  ControlSignal out = h;
  const int n_dogs = h.n_dogs(dim);
  for (int t = 0; t < h.grid.n_steps; ++t) {
    for (int m = 0; m < n_dogs; ++m) {
      auto block = out.dog(t, m, dim);
      const double norm = block.norm();
      if (norm > u_max) block *= u_max / norm;
    }
  }
  return out;
}

GradientField ncg_direction(const GradientField& grad, const GradientField& prev_grad,
                            const GradientField& prev_dir, int iter, int restart_period) {
  GradientField dir;
  dir.grid = grad.grid;
  if (iter == 0 || (restart_period > 0 && iter % restart_period == 0)) {
    dir.values = -grad.values;
    return dir;
  }
  const double denom = gradient_dot(prev_grad, prev_grad);
  double beta = 0.0;
  if (denom > 0.0) {
    GradientField diff{grad.values - prev_grad.values, grad.grid};
    beta = std::max(0.0, gradient_dot(grad, diff) / denom);
  }
  dir.values = -grad.values + beta * prev_dir.values;
  // Descent safeguard: fall back to steepest descent if <d, -g> <= 0.
  if (-gradient_dot(dir, grad) <= 0.0) dir.values = -grad.values;
  return dir;
}

LineSearchResult armijo_line_search(const ControlSignal& u, const GradientField& direction,
                                    const ReferenceData& ref, const SystemState& y0,
                                    const ModelParams& params, const ArmijoConfig& cfg,
                                    double current_cost) {
  double step = cfg.initial_step;
  for (int k = 0; k < cfg.max_backtracks; ++k, step *= cfg.shrink) {
    ControlSignal trial = u;
    trial.values += step * direction.values;
    trial = project_control(trial, params.u_max, params.dim);
    ControlSignal displacement{u.values - trial.values, u.grid};
    const double decrease = (cfg.slope / step) * control_dot(displacement, displacement);
    Trajectory traj = simulate_ode(y0, trial, params);
    const double cost = evaluate_cost(traj, trial, ref);
    if (cost <= current_cost - decrease)
      return {step, std::move(trial), cost, std::move(traj)};
  }
  throw LineSearchFailed("no sufficient decrease within max_backtracks");
}

CoarseSolution solve_coarse_ocp(const SystemState& y0, const ReferenceData& ref,
                                const ModelParams& params, const CoarseOptConfig& cfg,
                                const ControlSignal& u_init) {
  CoarseSolution sol;
  sol.u_opt = project_control(u_init, params.u_max, params.dim);
  sol.traj = simulate_ode(y0, sol.u_opt, params);
  sol.cost = evaluate_cost(sol.traj, sol.u_opt, ref);
  sol.cost_history.push_back(sol.cost);

  GradientField grad = reduced_gradient(sol.u_opt, ref, solve_adjoint(sol.traj, ref, params));
  GradientField dir{-grad.values, grad.grid};
  bool steepest = true;

  for (int n = 0; n < cfg.max_iters; ++n) {
    LineSearchResult accepted;
    try {
      accepted = armijo_line_search(sol.u_opt, dir, ref, y0, params, cfg.armijo, sol.cost);
    } catch (const LineSearchFailed&) {
      if (steepest) break;  // stalled even along the gradient
      dir.values = -grad.values;
      steepest = true;
      try {
        accepted = armijo_line_search(sol.u_opt, dir, ref, y0, params, cfg.armijo, sol.cost);
      } catch (const LineSearchFailed&) {
        break;
      }
    }

    ControlSignal delta{accepted.u.values - sol.u_opt.values, sol.u_opt.grid};
    const double change = control_norm(delta);
    sol.u_opt = std::move(accepted.u);
    sol.traj = std::move(accepted.traj);
    sol.cost = accepted.cost;
    sol.cost_history.push_back(sol.cost);
    sol.iterations = n + 1;
    if (change <= cfg.eps_opt) {
      sol.converged = true;
      break;
    }

    GradientField next_grad =
        reduced_gradient(sol.u_opt, ref, solve_adjoint(sol.traj, ref, params));
    dir = ncg_direction(next_grad, grad, dir, n + 1, cfg.cg_restart_period);
    steepest = ((dir.values + next_grad.values).squaredNorm() == 0.0);
    grad = std::move(next_grad);
  }
  return sol;
}

CoarseSolution solve_coarse_ocp(const SystemState& y0, const ReferenceData& ref,
                                const ModelParams& params, const CoarseOptConfig& cfg) {
  return solve_coarse_ocp(y0, ref, params, cfg,
                          ControlSignal::zero(ref.u_bar.grid, params.n_dogs, params.dim));
}

}  // namespace herding
