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

#include "herding/adjoint.hpp"

#include <cmath>
#include <string>

#include "herding/errors.hpp"

namespace herding {

double gradient_dot(const GradientField& a, const GradientField& b) {
  if (!a.grid.same_cell_shape(b.grid) || a.values.cols() != b.values.cols())
    throw GridMismatch("gradient_dot: fields live on different grids");
  return a.grid.dt * a.values.cwiseProduct(b.values).sum();
}

double gradient_norm(const GradientField& a) { return std::sqrt(gradient_dot(a, a)); }

namespace {

// out += weight * H(xi - xk) * w, where H is the interaction Jacobian.
inline void accumulate_jacobian_action(const double* xi, const double* xk, int dim,
                                       const PotentialParams& p, double eps_reg, double weight,
                                       const double* w, double* out) {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double delta = xi[d] - xk[d];
    r2 += delta * delta;
  }
  const double r = std::sqrt(r2);
  if (r <= eps_reg) return;
  const auto derivs = potential_derivs(r, p);
  double dot = 0.0;
  for (int d = 0; d < dim; ++d) dot += (xi[d] - xk[d]) * w[d];
  dot /= r2;
  const double radial = weight * (derivs.curvature - derivs.slope / r) * dot;
  const double tangential = weight * derivs.slope / r;
  for (int d = 0; d < dim; ++d) out[d] += tangential * w[d] + radial * (xi[d] - xk[d]);
}

}  // namespace

AdjointTrajectory solve_adjoint(const Trajectory& traj, const ReferenceData& ref,
                                const ModelParams& params, double tracking_scale) {
  const int n_steps = traj.grid.n_steps;
  const int n = params.n_sheep;
  const int m = params.n_dogs;
  const int dim = params.dim;
  if (static_cast<int>(traj.states.size()) != n_steps + 1)
    throw GridMismatch("solve_adjoint: trajectory does not match its grid");
  if (ref.z_bar.rows() != n_steps + 1)
    throw GridMismatch("solve_adjoint: z_bar does not match the trajectory grid");

  AdjointTrajectory adj;
  adj.grid = traj.grid;
  adj.xi1.assign(n_steps + 1, Matrix::Zero(n, dim));
  adj.xi2.assign(n_steps + 1, Matrix::Zero(n, dim));
  adj.xi3.assign(n_steps + 1, Matrix::Zero(m, dim));

  const double dt = traj.grid.dt;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int t = n_steps - 1; t >= 0; --t) {
    const SystemState& y = traj.states[t];
    const Matrix& xi1_next = adj.xi1[t + 1];
    const Matrix& xi2_next = adj.xi2[t + 1];
    const Matrix& xi3_next = adj.xi3[t + 1];

    // dxW^T xi2 and daW^T xi2 at the left-endpoint state of cell t.
    Matrix dx_action = Matrix::Zero(n, dim);
    Matrix da_action = Matrix::Zero(m, dim);
    Matrix pair_diff(1, dim);
    for (int k = 0; k < n; ++k) {
      const double* xk = y.x.row(k).data();
      double* out = dx_action.row(k).data();
      for (int j = 0; j < n; ++j) {
        if (j == k) continue;
        pair_diff = xi2_next.row(k) - xi2_next.row(j);
        accumulate_jacobian_action(xk, y.x.row(j).data(), dim, params.sheep_potential,
                                   kDefaultEpsReg, inv_n, pair_diff.data(), out);
      }
      for (int d = 0; d < m; ++d) {
        accumulate_jacobian_action(xk, y.a.row(d).data(), dim, params.dog_potential,
                                   kDefaultEpsReg, 1.0, xi2_next.row(k).data(), out);
        accumulate_jacobian_action(xk, y.a.row(d).data(), dim, params.dog_potential,
                                   kDefaultEpsReg, -1.0, xi2_next.row(k).data(),
                                   da_action.row(d).data());
      }
    }

    Matrix source = y.x;
    source.rowwise() -= ref.z_bar.row(t);
    adj.xi1[t] = xi1_next + dt * (tracking_scale * source - dx_action);
    adj.xi2[t] = xi2_next + dt * (xi1_next - params.friction * xi2_next);
    adj.xi3[t] = xi3_next + dt * da_action;
    if (!adj.xi1[t].allFinite() || !adj.xi2[t].allFinite() || !adj.xi3[t].allFinite())
      throw NonFiniteState("adjoint overflow at step " + std::to_string(t));
  }
  return adj;
}

AdjointTrajectory solve_adjoint(const Trajectory& traj, const ReferenceData& ref,
                                const ModelParams& params) {
  return solve_adjoint(traj, ref, params, 1.0 / static_cast<double>(params.n_sheep));
}

GradientField reduced_gradient(const ControlSignal& u, const ReferenceData& ref,
                               const AdjointTrajectory& adj) {
  if (!u.grid.same_cell_shape(adj.grid))
    throw GridMismatch("reduced_gradient: control and adjoint grids differ");
  if (!u.grid.same_cell_shape(ref.u_bar.grid) || ref.u_bar.values.cols() != u.values.cols())
    throw GridMismatch("reduced_gradient: u_bar does not match the control grid");

  GradientField grad;
  grad.grid = u.grid;
  grad.values = ref.gamma * (u.values - ref.u_bar.values);
  const int dim = adj.xi3.front().cols();
  const int n_dogs = adj.xi3.front().rows();
  for (int t = 0; t < u.grid.n_steps; ++t)
    for (int m = 0; m < n_dogs; ++m)
      for (int d = 0; d < dim; ++d) grad.values(t, m * dim + d) -= adj.xi3[t + 1](m, d);
  return grad;
}

GradientField finite_difference_gradient(const SystemState& y0, const ControlSignal& u,
                                         const ReferenceData& ref, const ModelParams& params,
                                         double h) {
  if (!(h > 0.0)) throw ValidationError("finite_difference_gradient: h must be > 0");
  GradientField grad;
  grad.grid = u.grid;
  grad.values = Matrix::Zero(u.values.rows(), u.values.cols());
  ControlSignal probe = u;
  for (Eigen::Index t = 0; t < u.values.rows(); ++t) {
    for (Eigen::Index c = 0; c < u.values.cols(); ++c) {
      probe.values(t, c) = u.values(t, c) + h;
      const double plus = evaluate_cost(simulate_ode(y0, probe, params), probe, ref);
      probe.values(t, c) = u.values(t, c) - h;
      const double minus = evaluate_cost(simulate_ode(y0, probe, params), probe, ref);
      probe.values(t, c) = u.values(t, c);
      grad.values(t, c) = (plus - minus) / (2.0 * h * u.grid.dt);
    }
  }
  return grad;
}

}  // namespace herding
