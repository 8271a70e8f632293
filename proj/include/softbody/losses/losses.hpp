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

#pragma once

#include <array>
#include <string>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/sim/simulator.hpp"

namespace softbody::losses {

using sim::center_of_gravity;
using sim::mass_avg_velocity;

enum class TaskKind { kWalkerX, kClimberY, kBalancerTip, kRotatorY };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

constexpr int kNumConstraints = 4;
/// Constraint order used everywhere: material, actuator, pulse sign, pulse magnitude.
enum ConstraintIndex : int { kMat = 0, kAct = 1, kPulSgn = 2, kPulAbs = 3 };

struct TaskSpec {
  TaskKind kind = TaskKind::kWalkerX;
  Eigen::Vector3d axis{1.0, 0.0, 0.0};
  std::vector<long> tip_set;  // balancer only, indices into the simulated particles
  std::array<Real, kNumConstraints> tolerance{0.0125, 0.04, 0.01, 0.01};

  /// C*_mat = 0.05 * 0.25, C*_act = 0.05 N/(N+1), C*_pul = 0.01.
  static std::array<Real, kNumConstraints> default_tolerances(int n_act);

  bool operator==(const TaskSpec&) const = default;
};

/// -sum_{k=1..N} (v_g(k) . axis) dt
template <int Dim>
Real loss_locomotion(const sim::Trajectory<Dim>& traj, const Vec<Dim>& axis);
/// (1/T) sum_{k=1..N} |x_tip(k) - x_tip(0)| dt
template <int Dim>
Real loss_balancer(const sim::Trajectory<Dim>& traj);
/// sum_{k=1..N} (H_y / I)(k) dt
Real loss_rotator(const sim::Trajectory<3>& traj);

/// Task loss evaluated by run_forward's recorded summaries.
template <int Dim>
Real task_loss(const TaskSpec& task, const sim::Trajectory<Dim>& traj);

/// Per-step form of the task loss: L = sum_{k=1..N} stage(s_k), with adjoint
/// seeds for the state and the particle masses.
template <int Dim>
class StageLoss {
 public:
  StageLoss(const TaskSpec& task, Real dt, Real total_time);

  /// Records reference quantities of the initial state (balancer tip).
  void begin(const sim::ParticleState<Dim>& s0);
  Real stage(const sim::ParticleState<Dim>& s, const sim::ParticleProps<Dim>& props) const;
  /// Adds d stage / d(x, v) into adj and d stage / d mass into mass_bar.
  void stage_backward(const sim::ParticleState<Dim>& s, const sim::ParticleProps<Dim>& props,
                      sim::ParticleState<Dim>& adj, std::vector<Real>& mass_bar) const;

 private:
  TaskSpec task_;
  Real dt_;
  Real total_time_;
  Vec<Dim> tip0_ = Vec<Dim>::Zero();
};

/// mean gamma (1 - gamma)
Real c_mat(const VectorX& gamma);
VectorX c_mat_grad(const VectorX& gamma);
/// mean over columns of (sum xi_i)^2 - |xi_i|^2, which is 1 - |xi_i|^2 for
/// columns summing to one
Real c_act(const MatrixX& xi);
MatrixX c_act_grad(const MatrixX& xi);
/// mean over entries of (1 + a)(1 - a)
Real c_pul(const MatrixX& a);
MatrixX c_pul_grad(const MatrixX& a);

/// max(0, C - C*)
Real penalty(Real c_value, Real c_star);

/// L + sum_m (-kappa_m P_m + tau_m P_m^2 / 2). Throws DomainError for tau <= 0.
Real augmented_lagrangian(Real l_task, const std::vector<Real>& penalties,
                          const std::vector<Real>& kappa, const std::vector<Real>& tau);
/// d(augmented_lagrangian) / d P_m = -kappa_m + tau_m P_m
std::vector<Real> augmented_lagrangian_penalty_grad(const std::vector<Real>& penalties,
                                                    const std::vector<Real>& kappa,
                                                    const std::vector<Real>& tau);

}  // namespace softbody::losses
