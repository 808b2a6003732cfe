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

#include <Eigen/Dense>
#include <cstdint>

namespace herding {

// Agent arrays are row-major with one row per agent and one column per
// space dimension, so a row is a contiguous position or velocity.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Regularization radius below which pair forces are defined to vanish.
inline constexpr double kDefaultEpsReg = 1e-12;

/// Exponential pair potential: c_r exp(-r/l_r) - c_a exp(-r/l_a).
struct PotentialParams {
  double c_r = 0.0;  // repulsion strength
  double c_a = 0.0;  // attraction strength
  double l_r = 1.0;  // repulsion range, > 0
  double l_a = 1.0;  // attraction range, > 0
};

/// Physical and numerical constants of the particle model.
///
/// noise == 0 selects the deterministic (coarse) model, noise > 0 the
/// stochastic (fine) one; everything else is shared between the two.
struct ModelParams {
  int n_sheep = 1;
  int n_dogs = 0;
  int dim = 2;
  double friction = 0.5;   // velocity damping coefficient
  double noise = 0.0;      // diffusion strength on velocities
  double u_max = 5e-2;     // per-dog speed bound for admissible controls
  PotentialParams sheep_potential;  // sheep-sheep interaction
  PotentialParams dog_potential;    // dog-sheep interaction

  bool is_coarse() const { return noise == 0.0; }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Sheep-sheep potential constants used throughout the experiments.
PotentialParams default_sheep_potential();
/// Dog-sheep potential constants used throughout the experiments.
PotentialParams default_dog_potential();

/// Uniform time grid t0, t0+dt, ..., t0+n_steps*dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-2;
  int n_steps = 0;

  double t1() const { return t0 + n_steps * dt; }
  double time(int step) const { return t0 + step * dt; }
  bool same_cell_shape(const TimeGrid& other) const {
    return dt == other.dt && n_steps == other.n_steps;
  }
};

/// Positions and velocities of the sheep plus positions of the dogs.
struct SystemState {
  Matrix x;  // n_sheep x dim
  Matrix v;  // n_sheep x dim
  Matrix a;  // n_dogs x dim

  bool all_finite() const {
    return x.allFinite() && v.allFinite() && a.allFinite();
  }
  /// Mean sheep position.
  Vector center_of_mass() const;
};

/// Piecewise-constant dog velocities on the cells of a grid.
///
/// Row t holds the M*D values active on [t0 + t*dt, t0 + (t+1)*dt); the
/// per-dog block of row t is dog(t, m).
struct ControlSignal {
  Matrix values;  // n_steps x (n_dogs * dim)
  TimeGrid grid;

  int n_dogs(int dim) const { return dim > 0 ? static_cast<int>(values.cols()) / dim : 0; }

  Eigen::Block<Matrix, 1, Eigen::Dynamic> dog(int step, int m, int dim) {
    return values.block<1, Eigen::Dynamic>(step, m * dim, 1, dim);
  }
  Eigen::Block<const Matrix, 1, Eigen::Dynamic> dog(int step, int m, int dim) const {
    return values.block<1, Eigen::Dynamic>(step, m * dim, 1, dim);
  }

  static ControlSignal zero(const TimeGrid& grid, int n_dogs, int dim);
};

/// Weighted inner product sum_t dt * <a_t, b_t> matching the L2 pairing of
/// piecewise-constant signals in time.
double control_dot(const ControlSignal& a, const ControlSignal& b);
/// L2 norm induced by control_dot.
double control_norm(const ControlSignal& a);

/// Tracking target, reference control and destination for one cost functional.
struct ReferenceData {
  Matrix z_bar;          // (n_steps+1) x dim desired trajectory at grid nodes
  ControlSignal u_bar;   // reference control on the same grid
  Vector z_des;          // destination point
  double gamma = 1e-2;   // control-cost weight, > 0
};

/// Potential value c_r exp(-r/l_r) - c_a exp(-r/l_a) at separation r >= 0.
double potential_value(double r, const PotentialParams& p);

/// Radial derivative of the potential.
double potential_slope(double r, const PotentialParams& p);

/// Second radial derivative of the potential.
double potential_curvature(double r, const PotentialParams& p);

/// First and second radial derivatives sharing one pair of exponentials.
struct PotentialDerivs {
  double slope;
  double curvature;
};
PotentialDerivs potential_derivs(double r, const PotentialParams& p);

/// Gradient of the potential as a vector field of the separation z;
/// zero for |z| <= eps_reg.
Vector interaction_force(const Eigen::Ref<const Vector>& z, const PotentialParams& p,
                         double eps_reg = kDefaultEpsReg);

/// Jacobian of interaction_force with respect to z; zero for |z| <= eps_reg.
Eigen::MatrixXd interaction_jacobian(const Eigen::Ref<const Vector>& z, const PotentialParams& p,
                                     double eps_reg = kDefaultEpsReg);

/// Full drift of the sheep velocities: for each sheep i the negative of
///   (1/N) sum_{k != i} G1(x_i - x_k) + sum_m G2(x_i - a_m) + friction * v_i.
Matrix velocity_drift(const SystemState& state, const ModelParams& params,
                      double eps_reg = kDefaultEpsReg);

}  // namespace herding
