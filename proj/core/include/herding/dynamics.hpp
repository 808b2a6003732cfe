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
#include <vector>

#include "herding/model.hpp"

namespace herding {

/// Discrete solution path on a grid; states[t] is the state at node t.
struct Trajectory {
  std::vector<SystemState> states;  // n_steps + 1 entries
  TimeGrid grid;
};

/// Sample means of a Monte Carlo ensemble of stochastic paths.
struct EnsembleStats {
  std::vector<Matrix> mean_x;  // per node: n_sheep x dim sample-mean positions
  Matrix mean_com;             // (n_steps+1) x dim mean of mean_x rows, exact
  int n_samples = 0;
  std::uint64_t seed = 0;
};

/// Seed-lane tags so derived streams never collide across purposes.
namespace seed_lane {
inline constexpr std::uint64_t kSample = 1;
inline constexpr std::uint64_t kPlant = 2;
inline constexpr std::uint64_t kWindow = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kPath = 5;
}  // namespace seed_lane

/// One explicit Euler step: x += dt*v, v += dt*drift, a += dt*u_cell.
SystemState step_euler(const SystemState& state, const Eigen::Ref<const Matrix>& u_cell,
                       double dt, const ModelParams& params);

/// As step_euler plus sigma * noise_increments added to the velocities.
/// noise_increments must be N(0, dt) i.i.d. draws; with sigma == 0 the result
/// is bit-identical to step_euler.
SystemState step_euler_maruyama(const SystemState& state, const Eigen::Ref<const Matrix>& u_cell,
                                double dt, const ModelParams& params,
                                const Eigen::Ref<const Matrix>& noise_increments);

/// Deterministic trajectory under the coarse model; params.noise is ignored.
/// Throws NonFiniteState if any entry blows up.
Trajectory simulate_ode(const SystemState& y0, const ControlSignal& u, const ModelParams& params);

/// One stochastic sample path. Per-particle noise streams are derived from
/// (seed, particle, step), so the path is reproducible for a fixed seed.
Trajectory simulate_sde(const SystemState& y0, const ControlSignal& u, const ModelParams& params,
                        std::uint64_t seed);

/// Monte Carlo estimate of the expected positions and expected center of mass.
/// Sample k uses the derived seed (seed, kSample, k); the reduction runs in
/// ascending sample order, so the estimate is independent of any schedule.
EnsembleStats monte_carlo_expectation(const SystemState& y0, const ControlSignal& u,
                                      const ModelParams& params, int n_samples,
                                      std::uint64_t seed);

/// Tracking-plus-control cost by left-endpoint rectangle quadrature:
///   sum_t dt * [ (1/2N) sum_k |x_k(t) - z_bar(t)|^2
///              + (gamma/2) |u(t) - u_bar(t)|^2 ].
/// The positions argument may be a deterministic path or ensemble means.
double evaluate_cost(const std::vector<Matrix>& positions, const ControlSignal& u,
                     const ReferenceData& ref);
double evaluate_cost(const Trajectory& traj, const ControlSignal& u, const ReferenceData& ref);

/// Sheep center of mass at every node of a path.
Matrix com_path(const Trajectory& traj);
Matrix com_path(const std::vector<Matrix>& positions);

}  // namespace herding
