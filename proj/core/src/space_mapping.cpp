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

#include "herding/space_mapping.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "herding/errors.hpp"

namespace herding {

BroydenState::BroydenState(Eigen::Index dim, double step_length)
    : dim_(dim), step_length_(step_length), u_cols_(dim, 0), v_cols_(dim, 0) {}

Eigen::VectorXd BroydenState::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (updates_ == 0) return v;
  return v + u_cols_ * (v_cols_.transpose() * v);
}

Eigen::VectorXd BroydenState::solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
  Eigen::VectorXd h;
  if (updates_ == 0) {
    h = rhs;
  } else {
    // (I + U V^T)^-1 = I - U (I_r + V^T U)^-1 V^T
    Eigen::MatrixXd small =
        Eigen::MatrixXd::Identity(updates_, updates_) + v_cols_.transpose() * u_cols_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(small);
    h = rhs - u_cols_ * lu.solve(v_cols_.transpose() * rhs);
  }
  const double rhs_norm = rhs.norm();
  if (!h.allFinite() || (apply(h) - rhs).norm() > 1e-8 * rhs_norm + 1e-300)
    throw SingularBroyden("Broyden system is numerically singular");
  return h;
}

void BroydenState::rank_one_update(const Eigen::Ref<const Eigen::VectorXd>& residual,
                                   const Eigen::Ref<const Eigen::VectorXd>& h_prev) {
  const double h_norm = h_prev.norm();
  if (h_norm < 1e-14) throw DegenerateStep("secant step shorter than 1e-14");
  u_cols_.conservativeResize(dim_, updates_ + 1);
  v_cols_.conservativeResize(dim_, updates_ + 1);
  u_cols_.col(updates_) = residual / (h_norm * h_norm);
  v_cols_.col(updates_) = h_prev;
  ++updates_;
}

void BroydenState::reset() {
  u_cols_.resize(dim_, 0);
  v_cols_.resize(dim_, 0);
  updates_ = 0;
}

Eigen::MatrixXd BroydenState::dense() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(dim_, dim_);
  if (updates_ > 0) b += u_cols_ * v_cols_.transpose();
  return b;
}

BroydenState broyden_update(BroydenState state, const Eigen::Ref<const Eigen::VectorXd>& residual,
                            const Eigen::Ref<const Eigen::VectorXd>& h_prev) {
  state.rank_one_update(residual, h_prev);
  return state;
}

namespace {

Eigen::VectorXd flatten(const Matrix& values) {
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

}  // namespace

SpaceMapEval evaluate_space_map(const ControlSignal& u_f, const SystemState& y0,
                                const ModelParams& params_fine, const ReferenceData& ref,
                                const SpaceMappingConfig& cfg,
                                const CoarseOptConfig& solver_cfg) {
  const EnsembleStats stats =
      monte_carlo_expectation(y0, u_f, params_fine, cfg.n_samples, cfg.seed);

  ReferenceData sm_ref = ref;
  sm_ref.z_bar = stats.mean_com;

  ModelParams coarse = params_fine;
  coarse.noise = 0.0;
  const CoarseSolution sol = solve_coarse_ocp(y0, sm_ref, coarse, solver_cfg, ref.u_bar);
  return {sol.u_opt, stats.mean_com};
}

SpaceMappingResult asm_iterate(const SpaceMapFn& map, const ControlSignal& u_c_star,
                               const SpaceMappingConfig& cfg, double u_max, int dim) {
  SpaceMappingResult result;
  result.u_c_star = u_c_star;
  result.u_f = project_control(u_c_star, u_max, dim);

  const double star_norm = control_norm(u_c_star);
  BroydenState broyden(u_c_star.values.size(), cfg.broyden_step_length);
  Eigen::VectorXd h_prev;
  bool restarted = false;
  double prev_rel = std::numeric_limits<double>::infinity();

  for (int k = 0;; ++k) {
    const SpaceMapEval eval = map(result.u_f);
    const Eigen::VectorXd residual = flatten(eval.mapped.values - u_c_star.values);
    // Relative residual in the dt-weighted norm; the weights cancel in the
    // ratio, and an absolute reading guards against a vanishing denominator.
    const double res_norm = std::sqrt(u_c_star.grid.dt) * residual.norm();
    const double rel = star_norm > 1e-12 ? res_norm / star_norm : res_norm;
    result.residual_history.push_back(rel);
    result.mean_com_history.push_back(eval.mean_com);

    if (rel < cfg.accept_threshold) break;
    if (k >= 1 && prev_rel - rel < cfg.rel_gap_stop) break;
    if (k >= cfg.max_sm_iters) break;
    prev_rel = rel;

    if (k > 1) {
      try {
        broyden.rank_one_update(residual, h_prev);
      } catch (const DegenerateStep&) {
        break;  // stagnation
      }
    }
    Eigen::VectorXd h;
    try {
      h = broyden.solve(-residual);
    } catch (const SingularBroyden&) {
      if (restarted) throw;
      broyden.reset();
      restarted = true;
      h = broyden.solve(-residual);
    }

    result.u_f.values +=
        broyden.step_length() *
        Eigen::Map<const Matrix>(h.data(), result.u_f.values.rows(), result.u_f.values.cols());
    result.u_f = project_control(result.u_f, u_max, dim);
    h_prev = std::move(h);
    result.iterations = k + 1;
  }
  return result;
}

SpaceMappingResult amcsm(const SystemState& y0, const ModelParams& params_fine,
                         const ReferenceData& ref, const SpaceMappingConfig& cfg,
                         const CoarseOptConfig& solver_cfg) {
  ModelParams coarse = params_fine;
  coarse.noise = 0.0;

  ReferenceData ref_star = ref;
  ref_star.u_bar = ControlSignal::zero(ref.u_bar.grid, params_fine.n_dogs, params_fine.dim);
  const CoarseSolution star = solve_coarse_ocp(y0, ref_star, coarse, solver_cfg);

  ReferenceData ref_map = ref;
  ref_map.u_bar = star.u_opt;
  const SpaceMapFn map = [&](const ControlSignal& u_f) {
    return evaluate_space_map(u_f, y0, params_fine, ref_map, cfg, solver_cfg);
  };

  SpaceMappingResult result =
      asm_iterate(map, star.u_opt, cfg, params_fine.u_max, params_fine.dim);
  result.coarse_com = com_path(star.traj);
  result.coarse_cost = star.cost;
  return result;
}

}  // namespace herding
