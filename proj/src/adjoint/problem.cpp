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
#include <limits>
#include <numeric>

namespace softbody::adjoint {

CheckpointPlan CheckpointPlan::make(long n_steps, long segment_len) {
  CheckpointPlan plan;
  plan.n_steps = n_steps;
  if (segment_len <= 0) {
    segment_len = std::lround(std::sqrt(static_cast<double>(n_steps)));
  }
  plan.segment_len = std::max(1L, segment_len);
  return plan;
}

template <int Dim>
SoftBodyProblem<Dim>::SoftBodyProblem(ProblemSetup<Dim> setup) : setup_(std::move(setup)) {
  if (setup_.positions.cols() != Dim) throw ShapeError("positions must have one column per axis");
  if (setup_.positions.rows() == 0) throw ShapeError("design domain holds no particles");
  if (setup_.params.n_steps < 0) throw DomainError("n_steps must be nonnegative");
  filter_ = design::FilterSpec(setup_.positions, setup_.filter_radius, setup_.filter_power);
}

template <int Dim>
DesignVariables SoftBodyProblem<Dim>::zero_design() const {
  return DesignVariables::zeros(n_par(), setup_.n_act, setup_.pulse.n_pul);
}

template <int Dim>
design::DerivedDesign SoftBodyProblem<Dim>::derive(const DesignVariables& vars) const {
  design::DerivedDesign d =
      design::derive_design(vars, filter_, setup_.pulse, setup_.params, setup_.map);
  if (setup_.signal_override) design::apply_signal_override(d, *setup_.signal_override, setup_.params);
  return d;
}

template <int Dim>
ConstraintValues SoftBodyProblem<Dim>::constraints(const DesignVariables& vars,
                                                   const design::DerivedDesign& derived) const {
  ConstraintValues c;
  c.value[losses::kMat] = losses::c_mat(derived.gamma);
  c.value[losses::kAct] = losses::c_act(derived.xi);
  c.value[losses::kPulSgn] = losses::c_pul(vars.A_sgn);
  c.value[losses::kPulAbs] = losses::c_pul(vars.A_abs);
  for (int m = 0; m < kNumConstraints; ++m) {
    c.penalty[m] = losses::penalty(c.value[m], setup_.task.tolerance[m]);
  }
  return c;
}

template <int Dim>
design::Body<Dim> SoftBodyProblem<Dim>::build_body(const design::DerivedDesign& derived,
                                                   const std::vector<int>& subset) const {
  std::vector<int> index = subset;
  if (index.empty()) {
    index.resize(n_par());
    std::iota(index.begin(), index.end(), 0);
  }
  design::Body<Dim> body;
  body.initial.resize(index.size());
  for (std::size_t p = 0; p < index.size(); ++p) {
    body.initial.x[p] = setup_.positions.row(index[p]).transpose();
  }
  design::assign_properties<Dim>(derived, setup_.mat, index, setup_.vol0, body.props,
                                 body.actuation);
  return body;
}

template <int Dim>
std::vector<long> top_row(const sim::ParticleState<Dim>& s) {
  Real top = -std::numeric_limits<Real>::infinity();
  for (const auto& x : s.x) top = std::max(top, x[1]);
  std::vector<long> idx;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (s.x[p][1] >= top - 1e-9) idx.push_back(static_cast<long>(p));
  }
  return idx;
}

template <int Dim>
losses::TaskSpec SoftBodyProblem<Dim>::task_for(const design::Body<Dim>& body) const {
  losses::TaskSpec task = setup_.task;
  if (task.kind == losses::TaskKind::kBalancerTip) task.tip_set = top_row<Dim>(body.initial);
  return task;
}

namespace {

std::vector<Real> as_vector(const std::array<Real, kNumConstraints>& a) {
  return std::vector<Real>(a.begin(), a.end());
}

}  // namespace

template <int Dim>
Evaluation SoftBodyProblem<Dim>::evaluate(const DesignVariables& vars,
                                          const std::vector<Real>& kappa,
                                          const std::vector<Real>& tau) const {
  const design::DerivedDesign derived = derive(vars);
  const design::Body<Dim> body = build_body(derived);
  const losses::TaskSpec task = task_for(body);
  losses::StageLoss<Dim> stage(task, setup_.params.dt, setup_.params.total_time);
  sim::Simulator<Dim> simulator(setup_.params, setup_.boundaries);

  Evaluation ev;
  ev.constraints = constraints(vars, derived);
  sim::ParticleState<Dim> s = body.initial;
  stage.begin(s);
  std::vector<Real> u;
  Real loss = 0.0;
  for (long k = 0; k < setup_.params.n_steps; ++k) {
    body.actuation.at_step(k, u);
    simulator.step(s, body.props, u, k, &ev.branches);
    loss += stage.stage(s, body.props);
  }
  ev.task_loss = loss;
  ev.objective = losses::augmented_lagrangian(loss, as_vector(ev.constraints.penalty), kappa, tau);
  return ev;
}

template <int Dim>
sim::Trajectory<Dim> SoftBodyProblem<Dim>::simulate(const design::DerivedDesign& derived,
                                                    const std::vector<int>& subset,
                                                    Real* task_loss) const {
  const design::Body<Dim> body = build_body(derived, subset);
  const losses::TaskSpec task = task_for(body);
  sim::RecordOptions options;
  options.tip_set = task.tip_set;
  if (task.kind == losses::TaskKind::kBalancerTip && options.tip_set.empty()) {
    options.tip_set = top_row<Dim>(body.initial);
  }
  options.spin = Dim == 3 && task.kind == losses::TaskKind::kRotatorY;
  sim::Simulator<Dim> simulator(setup_.params, setup_.boundaries);
  sim::Trajectory<Dim> traj = simulator.run(body.initial, body.props, body.actuation, options);
  if (task_loss != nullptr) *task_loss = losses::task_loss<Dim>(task, traj);
  return traj;
}

Real central_difference(const std::function<Real(Real)>& f, Real p, Real h) {
  return (f(p + h) - f(p - h)) / (2.0 * h);
}

Real relative_error(Real a, Real b, Real floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

template class SoftBodyProblem<2>;
template class SoftBodyProblem<3>;
template std::vector<long> top_row<2>(const sim::ParticleState<2>&);
template std::vector<long> top_row<3>(const sim::ParticleState<3>&);

}  // namespace softbody::adjoint
