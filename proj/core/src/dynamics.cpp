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

#include "herding/dynamics.hpp"

#include <string>

#include "herding/errors.hpp"
#include "herding/rng.hpp"

namespace herding {

namespace {

void check_shapes(const SystemState& state, const ControlSignal& u, const ModelParams& params) {
  if (state.x.rows() != params.n_sheep || state.x.cols() != params.dim ||
      state.v.rows() != params.n_sheep || state.v.cols() != params.dim ||
      state.a.rows() != params.n_dogs || state.a.cols() != params.dim)
    throw ValidationError("state arrays do not match n_sheep/n_dogs/dim");
  if (u.values.cols() != static_cast<Eigen::Index>(params.n_dogs) * params.dim)
    throw ValidationError("control width does not match n_dogs*dim");
}

// N(0, dt) increments for all sheep at one step, from counter-based streams.
Matrix noise_increments(std::uint64_t path_key, int step, int n_sheep, int dim, double dt) {
  Matrix inc(n_sheep, dim);
  const double sqrt_dt = std::sqrt(dt);
  const std::uint64_t pairs_per_particle = (static_cast<std::uint64_t>(dim) + 1) / 2;
  for (int i = 0; i < n_sheep; ++i) {
    const std::uint64_t base =
        (static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(n_sheep) + i) *
        pairs_per_particle;
    for (int d = 0; d < dim; d += 2) {
      const auto pair = rng::standard_normal_pair(path_key, base + d / 2);
      inc(i, d) = sqrt_dt * pair.z0;
      if (d + 1 < dim) inc(i, d + 1) = sqrt_dt * pair.z1;
    }
  }
  return inc;
}

Trajectory integrate(const SystemState& y0, const ControlSignal& u, const ModelParams& params,
                     bool stochastic, std::uint64_t seed) {
  check_shapes(y0, u, params);
  const std::uint64_t path_key = rng::derive(seed, seed_lane::kPath, 0);
  Trajectory traj;
  traj.grid = u.grid;
  traj.states.reserve(u.grid.n_steps + 1);
  traj.states.push_back(y0);
  for (int t = 0; t < u.grid.n_steps; ++t) {
    const Eigen::Map<const Matrix> u_cell(u.values.row(t).data(), params.n_dogs, params.dim);
    SystemState next;
    if (stochastic && params.noise != 0.0) {
      const Matrix inc =
          noise_increments(path_key, t, params.n_sheep, params.dim, u.grid.dt);
      next = step_euler_maruyama(traj.states.back(), u_cell, u.grid.dt, params, inc);
    } else {
      next = step_euler(traj.states.back(), u_cell, u.grid.dt, params);
    }
    if (!next.all_finite())
      throw NonFiniteState("non-finite state at step " + std::to_string(t + 1));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

}  // namespace

SystemState step_euler(const SystemState& state, const Eigen::Ref<const Matrix>& u_cell,
                       double dt, const ModelParams& params) {
  SystemState next;
  next.x = state.x + dt * state.v;
  next.v = state.v + dt * velocity_drift(state, params);
  next.a = state.a + dt * u_cell;
  return next;
}

SystemState step_euler_maruyama(const SystemState& state, const Eigen::Ref<const Matrix>& u_cell,
                                double dt, const ModelParams& params,
                                const Eigen::Ref<const Matrix>& noise_increments) {
  SystemState next = step_euler(state, u_cell, dt, params);
  if (params.noise != 0.0) next.v += params.noise * noise_increments;
  return next;
}

Trajectory simulate_ode(const SystemState& y0, const ControlSignal& u, const ModelParams& params) {
  return integrate(y0, u, params, /*stochastic=*/false, /*seed=*/0);
}

Trajectory simulate_sde(const SystemState& y0, const ControlSignal& u, const ModelParams& params,
                        std::uint64_t seed) {
  return integrate(y0, u, params, /*stochastic=*/true, seed);
}

EnsembleStats monte_carlo_expectation(const SystemState& y0, const ControlSignal& u,
                                      const ModelParams& params, int n_samples,
                                      std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  check_shapes(y0, u, params);

  EnsembleStats stats;
  stats.n_samples = n_samples;
  stats.seed = seed;
  stats.mean_x.assign(u.grid.n_steps + 1, Matrix::Zero(params.n_sheep, params.dim));

  for (int k = 0; k < n_samples; ++k) {
    const std::uint64_t sample_seed = rng::derive(seed, seed_lane::kSample, k);
    Trajectory path;
    try {
      path = simulate_sde(y0, u, params, sample_seed);
    } catch (const NonFiniteState& err) {
      throw NonFiniteState("sample " + std::to_string(k) + ": " + err.what());
    }
    for (int t = 0; t <= u.grid.n_steps; ++t) stats.mean_x[t] += path.states[t].x;
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  for (auto& slice : stats.mean_x) slice *= inv;

  stats.mean_com.resize(u.grid.n_steps + 1, params.dim);
  for (int t = 0; t <= u.grid.n_steps; ++t)
    stats.mean_com.row(t) = stats.mean_x[t].colwise().mean();
  return stats;
}

namespace {

template <typename PositionsAt>
double cost_impl(PositionsAt&& x_at, Eigen::Index n_nodes, const ControlSignal& u,
                 const ReferenceData& ref) {
  if (n_nodes != u.grid.n_steps + 1)
    throw GridMismatch("evaluate_cost: positions and control disagree on step count");
  if (ref.z_bar.rows() != n_nodes)
    throw GridMismatch("evaluate_cost: z_bar row count does not match the grid");
  if (!u.grid.same_cell_shape(ref.u_bar.grid) || ref.u_bar.values.cols() != u.values.cols())
    throw GridMismatch("evaluate_cost: u_bar does not match the control grid");

  const double inv_2n = 0.5 / static_cast<double>(x_at(0).rows());
  double total = 0.0;
  for (int t = 0; t < u.grid.n_steps; ++t) {
    const double tracking =
        inv_2n * (x_at(t).rowwise() - ref.z_bar.row(t)).squaredNorm();
    const double control =
        0.5 * ref.gamma * (u.values.row(t) - ref.u_bar.values.row(t)).squaredNorm();
    total += u.grid.dt * (tracking + control);
  }
  return total;
}

}  // namespace

double evaluate_cost(const std::vector<Matrix>& positions, const ControlSignal& u,
                     const ReferenceData& ref) {
  return cost_impl([&](int t) -> const Matrix& { return positions[t]; },
                   static_cast<Eigen::Index>(positions.size()), u, ref);
}

double evaluate_cost(const Trajectory& traj, const ControlSignal& u, const ReferenceData& ref) {
  return cost_impl([&](int t) -> const Matrix& { return traj.states[t].x; },
                   static_cast<Eigen::Index>(traj.states.size()), u, ref);
}

Matrix com_path(const Trajectory& traj) {
  Matrix path(traj.states.size(), traj.states.front().x.cols());
  for (std::size_t t = 0; t < traj.states.size(); ++t)
    path.row(t) = traj.states[t].x.colwise().mean();
  return path;
}

Matrix com_path(const std::vector<Matrix>& positions) {
  Matrix path(positions.size(), positions.front().cols());
  for (std::size_t t = 0; t < positions.size(); ++t)
    path.row(t) = positions[t].colwise().mean();
  return path;
}

}  // namespace herding
