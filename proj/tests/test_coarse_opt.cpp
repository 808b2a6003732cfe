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
#include <limits>

#include <doctest.h>

#include "herding/errors.hpp"
#include "test_support.hpp"

using namespace herding;

namespace {

ModelParams no_potentials(int n_sheep, int n_dogs) {
  ModelParams p = testing::make_params(n_sheep, n_dogs);
  p.sheep_potential = PotentialParams{0.0, 0.0, 1.0, 1.0};
  p.dog_potential = PotentialParams{0.0, 0.0, 1.0, 1.0};
  return p;
}

bool box_feasible(const ControlSignal& u, double u_max, int dim) {
  for (int t = 0; t < u.grid.n_steps; ++t)
    for (int m = 0; m < u.n_dogs(dim); ++m)
      if (u.dog(t, m, dim).norm() > u_max * (1.0 + 1e-12)) return false;
  return true;
}

}  // namespace

TEST_CASE("projection rescales only over-speed cells") {
  const TimeGrid grid{0.0, 1e-2, 3};
  ControlSignal u = ControlSignal::zero(grid, 2, 2);
  u.values(0, 0) = 0.1;   // dog 1 too fast
  u.values(1, 2) = 0.03;  // dog 2 within bounds
  const ControlSignal projected = project_control(u, 5e-2, 2);
  CHECK(projected.values(0, 0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(projected.values(1, 2) == 0.03);

  const ControlSignal twice = project_control(projected, 5e-2, 2);
  CHECK(twice.values == projected.values);
}

TEST_CASE("projection is nonexpansive in the weighted norm") {
  const TimeGrid grid{0.0, 1e-2, 20};
  const ModelParams params = testing::make_params(1, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const ControlSignal h1 = testing::random_control(grid, params, 300 + trial, 0.1);
    const ControlSignal h2 = testing::random_control(grid, params, 400 + trial, 0.1);
    const ControlSignal p1 = project_control(h1, params.u_max, params.dim);
    const ControlSignal p2 = project_control(h2, params.u_max, params.dim);
    ControlSignal dp{p1.values - p2.values, grid};
    ControlSignal dh{h1.values - h2.values, grid};
    CHECK(control_norm(dp) <= control_norm(dh) + 1e-15);
  }
}

TEST_CASE("conjugate directions follow the Polak-Ribiere recipe") {
  const TimeGrid grid{0.0, 1.0, 1};
  auto field = [&](double a, double b) {
    GradientField f;
    f.grid = grid;
    f.values.resize(1, 2);
    f.values << a, b;
    return f;
  };

  const GradientField g_prev = field(1.0, 0.0);
  const GradientField d_prev = field(-1.0, 0.0);

  SUBCASE("first iteration is steepest descent") {
    const GradientField d = ncg_direction(g_prev, g_prev, d_prev, 0, 10);
    CHECK(d.values(0, 0) == -1.0);
    CHECK(d.values(0, 1) == 0.0);
  }

  SUBCASE("unchanged gradient zeroes the momentum term") {
    const GradientField d = ncg_direction(g_prev, g_prev, d_prev, 3, 10);
    CHECK(d.values(0, 0) == -1.0);
    CHECK(d.values(0, 1) == 0.0);
  }

  SUBCASE("hand-computed beta") {
    // beta = <g, g - g_prev>/|g_prev|^2 = 0.2, d = -g + beta*d_prev
    const GradientField g = field(0.2, 0.6);
    const GradientField d = ncg_direction(g, g_prev, d_prev, 2, 10);
    CHECK(d.values(0, 0) == doctest::Approx(-0.4).epsilon(1e-15));
    CHECK(d.values(0, 1) == doctest::Approx(-0.6).epsilon(1e-15));
  }

  SUBCASE("negative curvature clamps beta to zero") {
    const GradientField g = field(0.9, 0.05);
    const GradientField d = ncg_direction(g, g_prev, d_prev, 2, 10);
    CHECK(d.values(0, 0) == doctest::Approx(-0.9).epsilon(1e-15));
    CHECK(d.values(0, 1) == doctest::Approx(-0.05).epsilon(1e-15));
  }

  SUBCASE("periodic restart returns to steepest descent") {
    const GradientField g = field(0.2, 0.6);
    const GradientField d = ncg_direction(g, g_prev, d_prev, 10, 10);
    CHECK(d.values(0, 0) == -0.2);
    CHECK(d.values(0, 1) == -0.6);
  }
}

TEST_CASE("line search hits the quadratic minimum up to one shrink factor") {
  // Potentials off and the path pinned on the reference: the reduced cost is
  // (gamma/2)||u||^2 with exact line minimizer s* = 1/gamma along -grad.
  const ModelParams params = no_potentials(1, 1);
  const TimeGrid grid{0.0, 1e-2, 10};
  SystemState s;
  s.x = Matrix::Zero(1, 2);
  s.v = Matrix::Zero(1, 2);
  s.a.resize(1, 2);
  s.a << 5.0, 5.0;

  ReferenceData ref = testing::simple_reference(grid, params, Vector::Zero(2), /*gamma=*/2.0);
  ControlSignal u = ControlSignal::zero(grid, 1, 2);
  u.values.setConstant(0.02);

  const Trajectory traj = simulate_ode(s, u, params);
  const double cost = evaluate_cost(traj, u, ref);
  const GradientField grad = reduced_gradient(u, ref, solve_adjoint(traj, ref, params));
  GradientField dir{-grad.values, grid};

  ArmijoConfig armijo;
  const LineSearchResult ls = armijo_line_search(u, dir, ref, s, params, armijo, cost);
  CHECK(ls.step == doctest::Approx(0.5));  // s* = 1/gamma, reached after one backtrack
  CHECK(ls.cost < cost);
  CHECK(ls.cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("line search fails cleanly when no descent is possible") {
  const ModelParams params = no_potentials(1, 1);
  const TimeGrid grid{0.0, 1e-2, 5};
  SystemState s;
  s.x = Matrix::Zero(1, 2);
  s.v = Matrix::Zero(1, 2);
  s.a = Matrix::Zero(1, 2);

  const ReferenceData ref = testing::simple_reference(grid, params, Vector::Zero(2), 1.0);
  const ControlSignal u = ControlSignal::zero(grid, 1, 2);  // global minimizer
  const Trajectory traj = simulate_ode(s, u, params);
  const double cost = evaluate_cost(traj, u, ref);

  GradientField ascent;  // deliberately an ascent direction
  ascent.grid = grid;
  ascent.values = Matrix::Constant(grid.n_steps, 2, 0.01);
  ArmijoConfig armijo;
  armijo.max_backtracks = 8;
  CHECK_THROWS_AS(armijo_line_search(u, ascent, ref, s, params, armijo, cost),
                  LineSearchFailed);
}

TEST_CASE("convex control-only problem converges to the reference control") {
  const ModelParams params = no_potentials(1, 1);
  const TimeGrid grid{0.0, 1e-2, 50};
  SystemState s;
  s.x = Matrix::Zero(1, 2);
  s.v = Matrix::Zero(1, 2);
  s.a.resize(1, 2);
  s.a << 3.0, 0.0;

  ReferenceData ref = testing::simple_reference(grid, params, Vector::Zero(2), /*gamma=*/1.0);
  ref.u_bar.values.setConstant(0.01);  // interior reference control

  CoarseOptConfig cfg;
  cfg.eps_opt = 1e-10;
  cfg.max_iters = 50;
  const CoarseSolution sol = solve_coarse_ocp(s, ref, params, cfg);

  CHECK(sol.converged);
  CHECK((sol.u_opt.values.array() - 0.01).abs().maxCoeff() < 1e-8);
  const GradientField grad =
      reduced_gradient(sol.u_opt, ref, solve_adjoint(sol.traj, ref, params));
  CHECK(gradient_norm(grad) < 1e-6);
}

TEST_CASE("solver matches a brute-force search over constant controls") {
  const ModelParams params = testing::make_params(1, 1);
  const TimeGrid grid{0.0, 1e-2, 100};
  SystemState s;
  s.x = Matrix::Zero(1, 2);
  s.v = Matrix::Zero(1, 2);
  s.a.resize(1, 2);
  s.a << 0.6, 0.0;  // dog east of the sheep pushes it west

  Vector z_des(2);
  z_des << -0.4, 0.0;
  ReferenceData ref;
  ref.z_bar.resize(grid.n_steps + 1, 2);
  for (int t = 0; t <= grid.n_steps; ++t) {
    const double w = static_cast<double>(t) / grid.n_steps;
    ref.z_bar.row(t) << -0.4 * w, 0.0;
  }
  ref.u_bar = ControlSignal::zero(grid, 1, 2);
  ref.z_des = z_des;
  ref.gamma = 1e-2;

  // Oracle: exhaustive search over constant controls on a 21x21 grid.
  double best = std::numeric_limits<double>::infinity();
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      ControlSignal u = ControlSignal::zero(grid, 1, 2);
      u.values.col(0).setConstant(params.u_max * i / 10.0);
      u.values.col(1).setConstant(params.u_max * j / 10.0);
      u = project_control(u, params.u_max, params.dim);
      best = std::min(best, evaluate_cost(simulate_ode(s, u, params), u, ref));
    }
  }

  CoarseOptConfig cfg;
  cfg.eps_opt = 1e-6;
  cfg.max_iters = 300;
  const CoarseSolution sol = solve_coarse_ocp(s, ref, params, cfg);
  CHECK(sol.cost < best + 1e-3);
}

TEST_CASE("stationary feasible start exits after a single no-op iteration") {
  const ModelParams params = no_potentials(1, 1);
  const TimeGrid grid{0.0, 1e-2, 20};
  SystemState s;
  s.x = Matrix::Zero(1, 2);
  s.v = Matrix::Zero(1, 2);
  s.a.resize(1, 2);
  s.a << 2.0, 2.0;

  ReferenceData ref = testing::simple_reference(grid, params, Vector::Zero(2), 1.0);
  ref.u_bar.values.setConstant(0.02);

  CoarseOptConfig cfg;
  const CoarseSolution sol = solve_coarse_ocp(s, ref, params, cfg, ref.u_bar);
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.u_opt.values == ref.u_bar.values);
}

TEST_CASE("cost history is monotone and iterates stay feasible") {
  const ModelParams params = testing::make_params(4, 2);
  const TimeGrid grid{0.0, 1e-2, 80};
  const SystemState s = testing::random_state(params, 500);

  Vector z_des(2);
  z_des << 1.0, 1.0;
  ReferenceData ref;
  ref.z_bar.resize(grid.n_steps + 1, 2);
  const Vector com = s.center_of_mass();
  for (int t = 0; t <= grid.n_steps; ++t) {
    const double w = static_cast<double>(t) / grid.n_steps;
    ref.z_bar.row(t) = ((1.0 - w) * com + w * z_des).transpose();
  }
  ref.u_bar = ControlSignal::zero(grid, 2, 2);
  ref.z_des = z_des;
  ref.gamma = 1e-2;

  CoarseOptConfig cfg;
  cfg.max_iters = 60;
  const CoarseSolution sol = solve_coarse_ocp(s, ref, params, cfg);

  REQUIRE(sol.cost_history.size() >= 2);
  for (std::size_t i = 1; i < sol.cost_history.size(); ++i)
    CHECK(sol.cost_history[i] <= sol.cost_history[i - 1]);
  CHECK(sol.cost_history.back() < sol.cost_history.front());
  CHECK(box_feasible(sol.u_opt, params.u_max, params.dim));
  CHECK(sol.cost == sol.cost_history.back());
}
