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
#include <functional>
#include <vector>

#include "herding/coarse_opt.hpp"
#include "herding/dynamics.hpp"
#include "herding/model.hpp"

namespace herding {

/// Broyden approximation of the residual Jacobian, B = I plus the accumulated
/// rank-one secant corrections. The corrections are stored as factors, so
/// applying and solving stay exact while memory grows only with the number of
/// updates; dense() materializes the full matrix when it is small enough to
/// want to look at.
class BroydenState {
 public:
  explicit BroydenState(Eigen::Index dim, double step_length = 1.0);

  Eigen::Index dim() const { return dim_; }
  int iteration() const { return updates_; }
  double step_length() const { return step_length_; }

  /// B * v.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  /// Solves B h = rhs; throws SingularBroyden when the factors are singular.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;

  /// B += (residual outer h_prev) / |h_prev|^2; throws DegenerateStep when
  /// |h_prev| < 1e-14.
  void rank_one_update(const Eigen::Ref<const Eigen::VectorXd>& residual,
                       const Eigen::Ref<const Eigen::VectorXd>& h_prev);

  /// Back to the identity.
  void reset();

  Eigen::MatrixXd dense() const;

 private:
  Eigen::Index dim_;
  double step_length_;
  int updates_ = 0;
  Eigen::MatrixXd u_cols_;  // dim x updates
  Eigen::MatrixXd v_cols_;  // dim x updates
};

/// Functional form of the rank-one secant update.
BroydenState broyden_update(BroydenState state, const Eigen::Ref<const Eigen::VectorXd>& residual,
                            const Eigen::Ref<const Eigen::VectorXd>& h_prev);

struct SpaceMappingConfig {
  double eps_sm = 0.5;           // residual tolerance used by the steering studies
  int max_sm_iters = 10;
  double rel_gap_stop = 0.005;   // minimum improvement of consecutive residuals
  double accept_threshold = 0.3; // relative-residual acceptance gate
  int n_samples = 100;
  std::uint64_t seed = 0;
  double broyden_step_length = 1.0;
};

struct SpaceMappingResult {
  ControlSignal u_f;
  int iterations = 0;
  std::vector<double> residual_history;  // one entry per evaluation, iterations+1 total
  ControlSignal u_c_star;
  std::vector<Matrix> mean_com_history;  // expected center of mass per evaluation
  Matrix coarse_com;                     // center of mass of the u_c_star trajectory
  double coarse_cost = 0.0;
};

struct SpaceMapEval {
  ControlSignal mapped;  // coarse control best matching the fine output
  Matrix mean_com;       // expected center-of-mass path used as the target
};

/// Space-mapping function: runs the Monte Carlo fine model under u_f, then
/// reoptimizes the coarse model against the resulting expected center of mass
/// with ref.u_bar as both reference control and warm start. The caller is
/// expected to pass ref.u_bar = u_c_star.
SpaceMapEval evaluate_space_map(const ControlSignal& u_f, const SystemState& y0,
                                const ModelParams& params_fine, const ReferenceData& ref,
                                const SpaceMappingConfig& cfg, const CoarseOptConfig& solver_cfg);

using SpaceMapFn = std::function<SpaceMapEval(const ControlSignal&)>;

/// Quasi-Newton loop on the residual map(u_f) - u_c_star with the Broyden
/// model. Stops when the relative residual falls below accept_threshold, the
/// improvement between consecutive residuals falls below rel_gap_stop, the
/// iteration budget runs out, or the secant step degenerates. Iterates are
/// projected onto the admissible set after every update.
SpaceMappingResult asm_iterate(const SpaceMapFn& map, const ControlSignal& u_c_star,
                               const SpaceMappingConfig& cfg, double u_max, int dim);

/// Full Monte Carlo space mapping: computes u_c_star against ref.z_bar with a
/// zero reference control, then runs asm_iterate on evaluate_space_map.
SpaceMappingResult amcsm(const SystemState& y0, const ModelParams& params_fine,
                         const ReferenceData& ref, const SpaceMappingConfig& cfg,
                         const CoarseOptConfig& solver_cfg);

}  // namespace herding
