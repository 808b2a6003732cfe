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

#include <benchmark/benchmark.h>

#include "herding/adjoint.hpp"
#include "herding/dynamics.hpp"
#include "herding/model.hpp"
#include "herding/rng.hpp"
#include "herding/space_mapping.hpp"

namespace {

using namespace herding;

ModelParams bench_params(int n_sheep, int n_dogs) {
  ModelParams p;
  p.n_sheep = n_sheep;
  p.n_dogs = n_dogs;
  p.sheep_potential = default_sheep_potential();
  p.dog_potential = default_dog_potential();
  return p;
}

SystemState bench_state(const ModelParams& p, std::uint64_t seed) {
  SystemState s;
  s.x.resize(p.n_sheep, p.dim);
  s.v = Matrix::Zero(p.n_sheep, p.dim);
  s.a.resize(p.n_dogs, p.dim);
  const std::uint64_t key = rng::derive(seed, 1);
  for (int i = 0; i < p.n_sheep; ++i)
    for (int d = 0; d < p.dim; ++d)
      s.x(i, d) = rng::uniform(key, static_cast<std::uint64_t>(i) * p.dim + d) - 0.5;
  for (int j = 0; j < p.n_dogs; ++j)
    for (int d = 0; d < p.dim; ++d)
      s.a(j, d) = 2.0 * rng::uniform(key, 1000 + static_cast<std::uint64_t>(j) * p.dim + d);
  return s;
}

void DriftAssembly(benchmark::State& state) {
  const ModelParams params = bench_params(static_cast<int>(state.range(0)), 5);
  const SystemState s = bench_state(params, 11);
  for (auto _ : state) {
    Matrix drift = velocity_drift(s, params);
    benchmark::DoNotOptimize(drift.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(DriftAssembly)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void ForwardSimulation(benchmark::State& state) {
  const ModelParams params = bench_params(static_cast<int>(state.range(0)), 5);
  const SystemState s = bench_state(params, 12);
  const TimeGrid grid{0.0, 1e-2, 100};
  const ControlSignal u = ControlSignal::zero(grid, params.n_dogs, params.dim);
  for (auto _ : state) {
    Trajectory traj = simulate_ode(s, u, params);
    benchmark::DoNotOptimize(traj.states.data());
  }
}
BENCHMARK(ForwardSimulation)->Arg(15)->Arg(30);

void AdjointSweep(benchmark::State& state) {
  const ModelParams params = bench_params(static_cast<int>(state.range(0)), 5);
  const SystemState s = bench_state(params, 13);
  const TimeGrid grid{0.0, 1e-2, 100};
  const ControlSignal u = ControlSignal::zero(grid, params.n_dogs, params.dim);
  const Trajectory traj = simulate_ode(s, u, params);
  ReferenceData ref;
  ref.z_bar = Matrix::Zero(grid.n_steps + 1, params.dim);
  ref.u_bar = u;
  ref.z_des = Vector::Zero(params.dim);
  for (auto _ : state) {
    AdjointTrajectory adj = solve_adjoint(traj, ref, params);
    benchmark::DoNotOptimize(adj.xi3.data());
  }
}
BENCHMARK(AdjointSweep)->Arg(15)->Arg(30);

void MonteCarloEnsemble(benchmark::State& state) {
  ModelParams params = bench_params(15, 5);
  params.noise = 0.02;
  const SystemState s = bench_state(params, 14);
  const TimeGrid grid{0.0, 1e-2, 100};
  const ControlSignal u = ControlSignal::zero(grid, params.n_dogs, params.dim);
  for (auto _ : state) {
    EnsembleStats stats =
        monte_carlo_expectation(s, u, params, static_cast<int>(state.range(0)), 3);
    benchmark::DoNotOptimize(stats.mean_com.data());
  }
}
BENCHMARK(MonteCarloEnsemble)->Arg(10)->Arg(50);

void BroydenSolve(benchmark::State& state) {
  const Eigen::Index dim = state.range(0);
  BroydenState broyden(dim);
  const std::uint64_t key = rng::derive(21, 2);
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd r(dim), h(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      r(i) = rng::uniform(key, 100 * k + i) - 0.5;
      h(i) = rng::uniform(key, 100 * k + 7 * i + 1) + 0.1;
    }
    broyden.rank_one_update(0.1 * r, h);
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(dim);
  for (auto _ : state) {
    Eigen::VectorXd h = broyden.solve(rhs);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BroydenSolve)->Arg(400)->Arg(4000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
