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

#include "herding/dynamics.hpp"
#include "herding/model.hpp"

namespace herding {

/// Costates of the deterministic control problem on the trajectory grid.
/// xi1 pairs with sheep positions, xi2 with sheep velocities, xi3 with dog
/// positions; the terminal slices are exactly zero.
struct AdjointTrajectory {
  std::vector<Matrix> xi1;  // (n_steps+1) slices, n_sheep x dim
  std::vector<Matrix> xi2;  // (n_steps+1) slices, n_sheep x dim
  std::vector<Matrix> xi3;  // (n_steps+1) slices, n_dogs x dim
  TimeGrid grid;
};

/// Gradient of the reduced cost in control space, as an L2 density on the
/// same cells as the control it differentiates.
struct GradientField {
  Matrix values;  // n_steps x (n_dogs * dim)
  TimeGrid grid;
};

double gradient_dot(const GradientField& a, const GradientField& b);
double gradient_norm(const GradientField& a);

/// Integrates the costate system backward in time along a deterministic
/// trajectory with zero terminal data:
///   xi1 <- xi1 + dt * (tracking_scale * (x - z_bar) - dxW^T xi2)
///   xi2 <- xi2 + dt * (xi1 - friction * xi2)
///   xi3 <- xi3 + dt * daW^T xi2
/// The Jacobian actions dxW^T, daW^T are assembled from interaction_jacobian
/// at the cell's left-endpoint state while the multipliers enter from the
/// right endpoint; this staggering makes the recursion the exact transpose
/// of the forward Euler linearization, which the finite-difference oracle
/// checks to round-off.
AdjointTrajectory solve_adjoint(const Trajectory& traj, const ReferenceData& ref,
                                const ModelParams& params, double tracking_scale);

/// Default tracking scale 1/n_sheep, matching the implemented cost.
AdjointTrajectory solve_adjoint(const Trajectory& traj, const ReferenceData& ref,
                                const ModelParams& params);

/// gamma * (u - u_bar) - xi3, with xi3 taken at each cell's right endpoint so
/// that dt * values is exactly the derivative of the discrete cost.
GradientField reduced_gradient(const ControlSignal& u, const ReferenceData& ref,
                               const AdjointTrajectory& adj);

/// Central finite differences of the reduced cost per control entry, returned
/// on the same L2-density scale as reduced_gradient. Cost grows quadratically
/// with the number of control entries; intended for tiny instances only.
GradientField finite_difference_gradient(const SystemState& y0, const ControlSignal& u,
                                         const ReferenceData& ref, const ModelParams& params,
                                         double h);

}  // namespace herding
