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

#include "softbody/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace softbody::scenario {

MatrixX seed_particles(const ScenarioConfig& config) {
  const int dim = config.sim.dim;
  const Real h = 0.5 * config.sim.dx;
  std::array<long, 3> count{1, 1, 1};
  for (int a = 0; a < dim; ++a) count[a] = std::lround(config.design_domain.size[a] / h);
  MatrixX out(count[0] * count[1] * count[2], dim);
  long row = 0;
  // x varies fastest.
  for (long k = 0; k < count[2]; ++k) {
    for (long j = 0; j < count[1]; ++j) {
      for (long i = 0; i < count[0]; ++i) {
        const long idx[3] = {i, j, k};
        for (int a = 0; a < dim; ++a) {
          out(row, a) = config.design_domain.origin[a] + (static_cast<Real>(idx[a]) + 0.5) * h;
        }
        ++row;
      }
    }
  }
  return out;
}

Real particle_volume(const ScenarioConfig& config) {
  return std::pow(0.5 * config.sim.dx, config.sim.dim);
}

template <int Dim>
adjoint::ProblemSetup<Dim> make_setup(const ScenarioConfig& config) {
  if (config.sim.dim != Dim) throw ConfigError("config dimension does not match the problem");
  adjoint::ProblemSetup<Dim> s;
  s.params = config.sim;
  s.boundaries = config.boundaries;
  s.mat = config.mat;
  s.positions = seed_particles(config);
  s.vol0 = particle_volume(config);
  s.filter_radius = config.filter_radius_cells * config.sim.dx;
  s.filter_power = config.filter_power;
  s.pulse = config.pulse;
  s.map = config.map;
  s.n_act = config.n_act;
  s.task = config.task;
  if (!config.signal_override.empty()) {
    s.signal_override = design::read_signals_csv(config.signal_override);
    if (s.signal_override->cols() != config.n_act + 1) {
      throw ConfigError("signal override must have one column per actuator plus t");
    }
  }
  return s;
}

design::DesignVariables initial_design(const ScenarioConfig& config, long n_par,
                                       std::mt19937_64& rng) {
  design::DesignVariables v = design::DesignVariables::zeros(n_par, config.n_act, config.pulse.n_pul);
  if (config.init_std > 0.0) {
    std::normal_distribution<double> normal(0.0, config.init_std);
    for (long k = 0; k < v.A_sgn.size(); ++k) v.A_sgn(k) = normal(rng);
    for (long k = 0; k < v.A_abs.size(); ++k) v.A_abs(k) = normal(rng);
  }
  return v;
}

Eigen::Vector3d gravity_at(const ScenarioConfig& config, long s) {
  if (!config.gravity_ramp.enabled) return config.sim.gravity;
  const auto& r = config.gravity_ramp;
  const Real mag = std::min(r.target, r.increment * static_cast<Real>(s / r.every));
  const Eigen::Vector3d g = config.sim.gravity;
  const Real n = g.norm();
  const Eigen::Vector3d dir = n > 0.0 ? Eigen::Vector3d(g / n) : Eigen::Vector3d(0.0, -1.0, 0.0);
  return mag * dir;
}

template <int Dim>
DesignProblem<Dim>::DesignProblem(const ScenarioConfig& config,
                                  adjoint::SoftBodyProblem<Dim>& problem,
                                  adjoint::CheckpointPlan plan)
    : config_(config), problem_(problem), plan_(plan), shape_(problem.zero_design()) {}

template <int Dim>
std::vector<std::string> DesignProblem<Dim>::constraint_names() const {
  return {"C_mat", "C_act", "C_pul_sgn", "C_pul_abs"};
}

template <int Dim>
design::DesignVariables DesignProblem<Dim>::unpack(const VectorX& x) const {
  design::DesignVariables v = shape_;
  v.unflatten(x);
  return v;
}

template <int Dim>
optimizer::EvalResult DesignProblem<Dim>::evaluate(const VectorX& x,
                                                   const std::vector<Real>& kappa,
                                                   const std::vector<Real>& tau) {
  const adjoint::GradientResult g = problem_.gradient(unpack(x), kappa, tau, plan_);
  optimizer::EvalResult r;
  r.objective = g.objective;
  r.task_loss = g.task_loss;
  r.constraint_values.assign(g.constraints.value.begin(), g.constraints.value.end());
  r.penalties.assign(g.constraints.penalty.begin(), g.constraints.penalty.end());
  r.gradient = g.grad.flatten();
  return r;
}

template <int Dim>
std::vector<Real> DesignProblem<Dim>::penalties(const VectorX& x) {
  const design::DesignVariables v = unpack(x);
  const adjoint::ConstraintValues c = problem_.constraints(v, problem_.derive(v));
  return {c.penalty.begin(), c.penalty.end()};
}

template <int Dim>
void DesignProblem<Dim>::clamp(VectorX& x) const {
  for (const auto& b : design::block_ranges(shape_)) {
    if (b.name != "Z") optimizer::clamp_range(x, b.begin, b.end, -1.0, 1.0);
  }
}

template <int Dim>
void DesignProblem<Dim>::before_iteration(long s) {
  problem_.set_gravity(gravity_at(config_, s));
}

template adjoint::ProblemSetup<2> make_setup<2>(const ScenarioConfig&);
template adjoint::ProblemSetup<3> make_setup<3>(const ScenarioConfig&);
template class DesignProblem<2>;
template class DesignProblem<3>;

}  // namespace softbody::scenario
