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

#include "herding/model.hpp"

#include <cmath>

#include "herding/errors.hpp"

namespace herding {

void ModelParams::validate() const {
  if (n_sheep < 1) throw ValidationError("n_sheep must be >= 1");
  if (n_dogs < 0) throw ValidationError("n_dogs must be >= 0");
  if (dim < 1) throw ValidationError("dim must be >= 1");
  if (friction < 0.0) throw ValidationError("friction must be >= 0");
  if (noise < 0.0) throw ValidationError("noise must be >= 0");
  if (!(u_max > 0.0)) throw ValidationError("u_max must be > 0");
  if (!(sheep_potential.l_r > 0.0)) throw ValidationError("sheep_potential.l_r must be > 0");
  if (!(sheep_potential.l_a > 0.0)) throw ValidationError("sheep_potential.l_a must be > 0");
  if (!(dog_potential.l_r > 0.0)) throw ValidationError("dog_potential.l_r must be > 0");
  if (!(dog_potential.l_a > 0.0)) throw ValidationError("dog_potential.l_a must be > 0");
  if (sheep_potential.c_r < 0.0 || sheep_potential.c_a < 0.0)
    throw ValidationError("sheep_potential strengths must be >= 0");
  if (dog_potential.c_r < 0.0 || dog_potential.c_a < 0.0)
    throw ValidationError("dog_potential strengths must be >= 0");
}

PotentialParams default_sheep_potential() { return {1.0, 5e-4, 2.0, 1e-2}; }

PotentialParams default_dog_potential() { return {1e-2, 5e-4, 0.5, 1e-2}; }

Vector SystemState::center_of_mass() const {
  return x.colwise().mean().transpose();
}

ControlSignal ControlSignal::zero(const TimeGrid& grid, int n_dogs, int dim) {
  ControlSignal u;
  u.grid = grid;
  u.values = Matrix::Zero(grid.n_steps, static_cast<Eigen::Index>(n_dogs) * dim);
  return u;
}

double control_dot(const ControlSignal& a, const ControlSignal& b) {
  if (!a.grid.same_cell_shape(b.grid) || a.values.cols() != b.values.cols())
    throw GridMismatch("control_dot: signals live on different grids");
  return a.grid.dt * a.values.cwiseProduct(b.values).sum();
}

double control_norm(const ControlSignal& a) { return std::sqrt(control_dot(a, a)); }

double potential_value(double r, const PotentialParams& p) {
  return p.c_r * std::exp(-r / p.l_r) - p.c_a * std::exp(-r / p.l_a);
}

double potential_slope(double r, const PotentialParams& p) {
  return -(p.c_r / p.l_r) * std::exp(-r / p.l_r) + (p.c_a / p.l_a) * std::exp(-r / p.l_a);
}

double potential_curvature(double r, const PotentialParams& p) {
  return (p.c_r / (p.l_r * p.l_r)) * std::exp(-r / p.l_r) -
         (p.c_a / (p.l_a * p.l_a)) * std::exp(-r / p.l_a);
}

PotentialDerivs potential_derivs(double r, const PotentialParams& p) {
  const double e_r = std::exp(-r / p.l_r);
  const double e_a = std::exp(-r / p.l_a);
  return {-(p.c_r / p.l_r) * e_r + (p.c_a / p.l_a) * e_a,
          (p.c_r / (p.l_r * p.l_r)) * e_r - (p.c_a / (p.l_a * p.l_a)) * e_a};
}

namespace {

// force += slope(|xi - xk|) * (xi - xk)/|xi - xk|, written for tight loops
// over small dim without temporaries.
inline void accumulate_pair_force(const double* xi, const double* xk, int dim,
                                  const PotentialParams& p, double eps_reg, double weight,
                                  double* force) {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double delta = xi[d] - xk[d];
    r2 += delta * delta;
  }
  const double r = std::sqrt(r2);
  if (r <= eps_reg) return;
  const double scale = weight * potential_slope(r, p) / r;
  for (int d = 0; d < dim; ++d) force[d] += scale * (xi[d] - xk[d]);
}

}  // namespace

Vector interaction_force(const Eigen::Ref<const Vector>& z, const PotentialParams& p,
                         double eps_reg) {
  Vector force = Vector::Zero(z.size());
  const double r = z.norm();
  if (r <= eps_reg) return force;
  force = (potential_slope(r, p) / r) * z;
  return force;
}

Eigen::MatrixXd interaction_jacobian(const Eigen::Ref<const Vector>& z, const PotentialParams& p,
                                     double eps_reg) {
  const auto dim = z.size();
  const double r = z.norm();
  if (r <= eps_reg) return Eigen::MatrixXd::Zero(dim, dim);
  const Vector unit = z / r;
  const double slope = potential_slope(r, p);
  const double curvature = potential_curvature(r, p);
  Eigen::MatrixXd jac = (slope / r) * Eigen::MatrixXd::Identity(dim, dim);
  jac += (curvature - slope / r) * (unit * unit.transpose());
  return jac;
}

Matrix velocity_drift(const SystemState& state, const ModelParams& params, double eps_reg) {
  const int n = params.n_sheep;
  const int m = params.n_dogs;
  const int dim = params.dim;
  Matrix drift = Matrix::Zero(n, dim);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int i = 0; i < n; ++i) {
    const double* xi = state.x.row(i).data();
    double* w = drift.row(i).data();
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      accumulate_pair_force(xi, state.x.row(k).data(), dim, params.sheep_potential, eps_reg,
                            inv_n, w);
    }
    for (int j = 0; j < m; ++j) {
      accumulate_pair_force(xi, state.a.row(j).data(), dim, params.dog_potential, eps_reg, 1.0,
                            w);
    }
    for (int d = 0; d < dim; ++d) {
      w[d] += params.friction * state.v(i, d);
      w[d] = -w[d];
    }
  }
  return drift;
}

}  // namespace herding
