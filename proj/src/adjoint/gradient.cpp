// Copyright 2026 The softbody4d Authors
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

#include "softbody/adjoint/problem.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "softbody/sim/kernels.hpp"

namespace softbody::adjoint {

namespace {

template <int Dim>
bool all_finite(const sim::ParticleState<Dim>& adj) {
  for (std::size_t p = 0; p < adj.size(); ++p) {
    if (!adj.x[p].allFinite() || !adj.v[p].allFinite() || !adj.F[p].allFinite() ||
        !adj.C[p].allFinite()) {
      return false;
    }
  }
  return true;
}

}  // namespace

template <int Dim>
GradientResult SoftBodyProblem<Dim>::gradient(const DesignVariables& vars,
                                              const std::vector<Real>& kappa,
                                              const std::vector<Real>& tau,
                                              const CheckpointPlan& plan,
                                              CheckpointStats* stats) const {
  const sim::SimParams& params = setup_.params;
  const long n = params.n_steps;
  if (plan.n_steps != n) throw ShapeError("checkpoint plan does not match the step count");
  const design::DerivedDesign derived = derive(vars);
  const design::Body<Dim> body = build_body(derived);
  const losses::TaskSpec task = task_for(body);
  losses::StageLoss<Dim> stage(task, params.dt, params.total_time);
  sim::Simulator<Dim> simulator(params, setup_.boundaries);
  const long np = static_cast<long>(body.initial.size());

  GradientResult result;
  result.constraints = constraints(vars, derived);
  std::vector<Real> penalties(result.constraints.penalty.begin(), result.constraints.penalty.end());

  // Forward sweep, keeping one snapshot per segment start.
  std::vector<sim::ParticleState<Dim>> snapshots;
  snapshots.reserve(plan.n_segments());
  sim::ParticleState<Dim> s = body.initial;
  stage.begin(s);
  std::vector<Real> u;
  Real loss = 0.0;
  for (long k = 0; k < n; ++k) {
    if (k % plan.segment_len == 0) snapshots.push_back(s);
    body.actuation.at_step(k, u);
    simulator.step(s, body.props, u, k);
    loss += stage.stage(s, body.props);
  }
  result.task_loss = loss;
  result.objective = losses::augmented_lagrangian(loss, penalties, kappa, tau);
  if (stats != nullptr) stats->peak_snapshots = static_cast<long>(snapshots.size());

  // Reverse sweep.
  design::DerivedDesignAdjoint dadj;
  dadj.reset(derived);
  sim::PropsAdjoint props_adj;
  props_adj.reset(np);
  sim::ParticleState<Dim> adj_next;
  sim::ParticleState<Dim> adj;
  adj_next.set_zero(np);
  if (n > 0) stage.stage_backward(s, body.props, adj_next, props_adj.mass);
  sim::GridField<Dim> grid_adj(params.nodes_per_axis);
  std::vector<Real> u_bar;
  std::vector<sim::ParticleState<Dim>> segment;
  for (long seg = plan.n_segments() - 1; seg >= 0; --seg) {
    const long k0 = seg * plan.segment_len;
    const long k1 = std::min(n, k0 + plan.segment_len);
    segment.resize(k1 - k0 + 1);
    segment[0] = std::move(snapshots[seg]);
    snapshots.pop_back();
    for (long k = k0; k < k1; ++k) {
      segment[k - k0 + 1] = segment[k - k0];
      body.actuation.at_step(k, u);
      simulator.step(segment[k - k0 + 1], body.props, u, k);
    }
    if (stats != nullptr) {
      stats->recomputed_steps += k1 - k0;
      stats->peak_segment_states =
          std::max(stats->peak_segment_states, static_cast<long>(segment.size()));
    }
    for (long k = k1 - 1; k >= k0; --k) {
      const sim::ParticleState<Dim>& sk = segment[k - k0];
      const sim::ParticleState<Dim>& sk1 = segment[k - k0 + 1];
      body.actuation.at_step(k, u);
      simulator.rebuild_grid(sk, body.props, u, k);
      const sim::GridField<Dim>& grid = simulator.grid();
      sim::g2p_backward<Dim>(grid, sk, sk1, adj_next, grid_adj, adj, params);
      sim::grid_update_backward<Dim>(grid, params, setup_.boundaries,
                                     static_cast<Real>(k) * params.dt, grid_adj);
      sim::p2g_backward<Dim>(sk, body.props, u, grid_adj, params, adj, props_adj, u_bar);
      design::particle_actuation_backward(derived, body.props.design_index, k, u_bar,
                                          setup_.mat.eps, dadj);
      if (k >= 1) stage.stage_backward(sk, body.props, adj, props_adj.mass);
      if (!all_finite<Dim>(adj)) throw NonFiniteAdjointError("non-finite adjoint state", k);
      std::swap(adj, adj_next);
    }
  }

  design::assign_properties_backward<Dim>(setup_.mat, body.props, props_adj, setup_.vol0,
                                          dadj.gamma);
  if (setup_.signal_override) dadj.u_hat.setZero();
  const std::vector<Real> coef = losses::augmented_lagrangian_penalty_grad(penalties, kappa, tau);
  // max(0, .) has zero derivative on the feasible side and at the kink.
  auto active = [&](int m) { return penalties[m] > 0.0 ? coef[m] : 0.0; };
  dadj.gamma += active(losses::kMat) * losses::c_mat_grad(derived.gamma);
  dadj.xi += active(losses::kAct) * losses::c_act_grad(derived.xi);
  result.grad = design::derive_design_backward(vars, derived, dadj, filter_, setup_.pulse,
                                               params, setup_.map);
  result.grad.A_sgn += active(losses::kPulSgn) * losses::c_pul_grad(vars.A_sgn);
  result.grad.A_abs += active(losses::kPulAbs) * losses::c_pul_grad(vars.A_abs);
  if (!result.grad.flatten().allFinite()) {
    throw NonFiniteAdjointError("non-finite design gradient", 0);
  }
  return result;
}

template <int Dim>
std::vector<FdEntry> finite_diff_gradient(const SoftBodyProblem<Dim>& problem,
                                          const DesignVariables& vars,
                                          const std::vector<Real>& kappa,
                                          const std::vector<Real>& tau,
                                          const std::vector<long>& indices, Real h) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  const Evaluation base = problem.evaluate(vars, kappa, tau);
  const VectorX flat = vars.flatten();
  const auto blocks = design::block_ranges(vars);
  const auto& tol = problem.setup().task.tolerance;
  auto kink_side = [&](const Evaluation& e, int m) {
    return e.constraints.value[m] > tol[m];
  };

  std::vector<FdEntry> out;
  for (long idx : indices) {
    if (idx < 0 || idx >= flat.size()) throw DomainError("finite difference index out of range");
    FdEntry e;
    e.index = idx;
    e.h = h;
    for (const auto& b : blocks) {
      if (idx >= b.begin && idx < b.end) {
        e.block = b.name;
        e.local = idx - b.begin;
      }
    }
    DesignVariables plus = vars;
    DesignVariables minus = vars;
    VectorX fp = flat;
    VectorX fm = flat;
    fp[idx] += h;
    fm[idx] -= h;
    plus.unflatten(fp);
    minus.unflatten(fm);
    try {
      const Evaluation ep = problem.evaluate(plus, kappa, tau);
      const Evaluation em = problem.evaluate(minus, kappa, tau);
      e.fd = (ep.objective - em.objective) / (2.0 * h);
      e.forward = (ep.objective - base.objective) / h;
      e.backward = (base.objective - em.objective) / h;
      e.branch_crossing = ep.branches.fingerprint != base.branches.fingerprint ||
                          em.branches.fingerprint != base.branches.fingerprint;
      for (int m = 0; m < kNumConstraints; ++m) {
        if (kink_side(ep, m) != kink_side(base, m) || kink_side(em, m) != kink_side(base, m)) {
          e.branch_crossing = true;
        }
      }
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

template GradientResult SoftBodyProblem<2>::gradient(const DesignVariables&,
                                                     const std::vector<Real>&,
                                                     const std::vector<Real>&,
                                                     const CheckpointPlan&,
                                                     CheckpointStats*) const;
template GradientResult SoftBodyProblem<3>::gradient(const DesignVariables&,
                                                     const std::vector<Real>&,
                                                     const std::vector<Real>&,
                                                     const CheckpointPlan&,
                                                     CheckpointStats*) const;
template std::vector<FdEntry> finite_diff_gradient<2>(const SoftBodyProblem<2>&,
                                                      const DesignVariables&,
                                                      const std::vector<Real>&,
                                                      const std::vector<Real>&,
                                                      const std::vector<long>&, Real);
template std::vector<FdEntry> finite_diff_gradient<3>(const SoftBodyProblem<3>&,
                                                      const DesignVariables&,
                                                      const std::vector<Real>&,
                                                      const std::vector<Real>&,
                                                      const std::vector<long>&, Real);

}  // namespace softbody::adjoint
