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

#include "softbody/losses/losses.hpp"

#include <algorithm>

namespace softbody::losses {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kWalkerX: return "walker_x";
    case TaskKind::kClimberY: return "climber_y";
    case TaskKind::kBalancerTip: return "balancer_tip";
    case TaskKind::kRotatorY: return "rotator_y";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "walker_x") return TaskKind::kWalkerX;
  if (s == "climber_y") return TaskKind::kClimberY;
  if (s == "balancer_tip") return TaskKind::kBalancerTip;
  if (s == "rotator_y") return TaskKind::kRotatorY;
  throw DomainError("unknown task kind '" + s + "'");
}

std::array<Real, kNumConstraints> TaskSpec::default_tolerances(int n_act) {
  return {0.05 * 0.25, 0.05 * n_act / (n_act + 1.0), 0.01, 0.01};
}

template <int Dim>
Real loss_locomotion(const sim::Trajectory<Dim>& traj, const Vec<Dim>& axis) {
  Real sum = 0.0;
  for (std::size_t k = 1; k < traj.mass_avg_velocity.size(); ++k) {
    sum += traj.mass_avg_velocity[k].dot(axis) * traj.dt;
  }
  return -sum;
}

template <int Dim>
Real loss_balancer(const sim::Trajectory<Dim>& traj) {
  if (traj.n_steps == 0) return 0.0;
  if (traj.tip_centroid.empty()) throw DomainError("loss_balancer: tip centroid not recorded");
  Real sum = 0.0;
  for (std::size_t k = 1; k < traj.tip_centroid.size(); ++k) {
    sum += (traj.tip_centroid[k] - traj.tip_centroid[0]).norm() * traj.dt;
  }
  return sum / (static_cast<Real>(traj.n_steps) * traj.dt);
}

Real loss_rotator(const sim::Trajectory<3>& traj) {
  if (traj.n_steps > 0 && traj.spin_ratio.empty()) {
    throw DomainError("loss_rotator: spin ratio not recorded");
  }
  Real sum = 0.0;
  for (std::size_t k = 1; k < traj.spin_ratio.size(); ++k) sum += traj.spin_ratio[k] * traj.dt;
  return sum;
}

template <int Dim>
Real task_loss(const TaskSpec& task, const sim::Trajectory<Dim>& traj) {
  switch (task.kind) {
    case TaskKind::kWalkerX:
    case TaskKind::kClimberY:
      return loss_locomotion<Dim>(traj, task.axis.head<Dim>());
    case TaskKind::kBalancerTip:
      return loss_balancer<Dim>(traj);
    case TaskKind::kRotatorY:
      if constexpr (Dim == 3) {
        return loss_rotator(traj);
      } else {
        throw DomainError("rotator task requires a 3D scenario");
      }
  }
  return 0.0;
}

template <int Dim>
StageLoss<Dim>::StageLoss(const TaskSpec& task, Real dt, Real total_time)
    : task_(task), dt_(dt), total_time_(total_time) {
  if (task_.kind == TaskKind::kBalancerTip && task_.tip_set.empty()) {
    throw DomainError("balancer task needs a nonempty tip set");
  }
  if (task_.kind == TaskKind::kRotatorY && Dim != 3) {
    throw DomainError("rotator task requires a 3D scenario");
  }
}

template <int Dim>
void StageLoss<Dim>::begin(const sim::ParticleState<Dim>& s0) {
  if (task_.kind == TaskKind::kBalancerTip) tip0_ = sim::tip_centroid<Dim>(s0, task_.tip_set);
}

template <int Dim>
Real StageLoss<Dim>::stage(const sim::ParticleState<Dim>& s,
                           const sim::ParticleProps<Dim>& props) const {
  switch (task_.kind) {
    case TaskKind::kWalkerX:
    case TaskKind::kClimberY:
      return -mass_avg_velocity<Dim>(s, props).dot(task_.axis.head<Dim>()) * dt_;
    case TaskKind::kBalancerTip:
      return (sim::tip_centroid<Dim>(s, task_.tip_set) - tip0_).norm() * dt_ / total_time_;
    case TaskKind::kRotatorY:
      if constexpr (Dim == 3) return sim::spin_ratio(s, props) * dt_;
      break;
  }
  return 0.0;
}

template <int Dim>
void StageLoss<Dim>::stage_backward(const sim::ParticleState<Dim>& s,
                                    const sim::ParticleProps<Dim>& props,
                                    sim::ParticleState<Dim>& adj,
                                    std::vector<Real>& mass_bar) const {
  const std::size_t np = s.size();
  switch (task_.kind) {
    case TaskKind::kWalkerX:
    case TaskKind::kClimberY: {
      const Vec<Dim> a = task_.axis.head<Dim>();
      Real total = 0.0;
      for (std::size_t p = 0; p < np; ++p) total += props.mass[p];
      const Vec<Dim> vg = mass_avg_velocity<Dim>(s, props);
      const Real c = -dt_ / total;
      for (std::size_t p = 0; p < np; ++p) {
        adj.v[p] += (c * props.mass[p]) * a;
        mass_bar[p] += c * (s.v[p] - vg).dot(a);
      }
      return;
    }
    case TaskKind::kBalancerTip: {
      const Vec<Dim> d = sim::tip_centroid<Dim>(s, task_.tip_set) - tip0_;
      const Real n = d.norm();
      if (!(n > 0.0)) return;  // zero subgradient at the kink
      const Vec<Dim> g =
          (dt_ / total_time_ / static_cast<Real>(task_.tip_set.size()) / n) * d;
      for (long p : task_.tip_set) adj.x[p] += g;
      return;
    }
    case TaskKind::kRotatorY: {
      if constexpr (Dim == 3) {
        const Vec<3> xg = center_of_gravity<3>(s, props);
        const Vec<3> vg = mass_avg_velocity<3>(s, props);
        const Vec<3> ey(0.0, 1.0, 0.0);
        Real h = 0.0;
        Real inertia = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
          const Vec<3> r = s.x[p] - xg;
          h += props.mass[p] * r.cross(s.v[p] - vg).dot(ey);
          inertia += props.mass[p] * r.squaredNorm();
        }
        const Real dh = dt_ / inertia;
        const Real di = -dt_ * h / (inertia * inertia);
        for (std::size_t p = 0; p < np; ++p) {
          const Vec<3> r = s.x[p] - xg;
          const Vec<3> w = s.v[p] - vg;
          const Real m = props.mass[p];
          adj.x[p] += dh * m * w.cross(ey) + di * 2.0 * m * r;
          adj.v[p] += dh * m * ey.cross(r);
          mass_bar[p] += dh * r.cross(w).dot(ey) + di * r.squaredNorm();
        }
      }
      return;
    }
  }
}

namespace {

// Extended-precision accumulation keeps the means of constant inputs exact.
template <class F>
Real extended_mean(long n, F&& term) {
  long double sum = 0.0L;
  for (long i = 0; i < n; ++i) sum += term(i);
  return static_cast<Real>(sum / static_cast<long double>(n));
}

}  // namespace

Real c_mat(const VectorX& gamma) {
  if (gamma.size() == 0) return 0.0;
  return extended_mean(gamma.size(), [&](long i) {
    const long double g = gamma[i];
    return g * (1.0L - g);
  });
}

VectorX c_mat_grad(const VectorX& gamma) {
  return ((1.0 - 2.0 * gamma.array()) / static_cast<Real>(gamma.size())).matrix();
}

Real c_act(const MatrixX& xi) {
  if (xi.cols() == 0) return 0.0;
  // (sum xi)^2 - sum xi^2, equal to 1 - sum xi^2 on softmax columns
  return extended_mean(xi.cols(), [&](long i) {
    long double sum = 0.0L, sq = 0.0L;
    for (long j = 0; j < xi.rows(); ++j) {
      sum += xi(j, i);
      sq += static_cast<long double>(xi(j, i)) * xi(j, i);
    }
    return sum * sum - sq;
  });
}

MatrixX c_act_grad(const MatrixX& xi) {
  const MatrixX sums = xi.colwise().sum().replicate(xi.rows(), 1);
  return (2.0 / static_cast<Real>(xi.cols())) * (sums - xi);
}

Real c_pul(const MatrixX& a) {
  if (a.size() == 0) return 0.0;
  return extended_mean(a.size(), [&](long i) {
    const long double v = a(i);
    return (1.0L + v) * (1.0L - v);
  });
}

MatrixX c_pul_grad(const MatrixX& a) {
  return (-2.0 / static_cast<Real>(a.size())) * a;
}

Real penalty(Real c_value, Real c_star) { return std::max(0.0, c_value - c_star); }

Real augmented_lagrangian(Real l_task, const std::vector<Real>& penalties,
                          const std::vector<Real>& kappa, const std::vector<Real>& tau) {
  if (penalties.size() != kappa.size() || penalties.size() != tau.size()) {
    throw ShapeError("augmented_lagrangian: vector lengths differ");
  }
  Real total = l_task;
  for (std::size_t m = 0; m < penalties.size(); ++m) {
    if (!(tau[m] > 0.0)) throw DomainError("augmented_lagrangian: tau must be positive");
    total += -kappa[m] * penalties[m] + 0.5 * tau[m] * penalties[m] * penalties[m];
  }
  return total;
}

std::vector<Real> augmented_lagrangian_penalty_grad(const std::vector<Real>& penalties,
                                                    const std::vector<Real>& kappa,
                                                    const std::vector<Real>& tau) {
  std::vector<Real> g(penalties.size());
  for (std::size_t m = 0; m < penalties.size(); ++m) g[m] = -kappa[m] + tau[m] * penalties[m];
  return g;
}

template Real loss_locomotion<2>(const sim::Trajectory<2>&, const Vec<2>&);
template Real loss_locomotion<3>(const sim::Trajectory<3>&, const Vec<3>&);
template Real loss_balancer<2>(const sim::Trajectory<2>&);
template Real loss_balancer<3>(const sim::Trajectory<3>&);
template Real task_loss<2>(const TaskSpec&, const sim::Trajectory<2>&);
template Real task_loss<3>(const TaskSpec&, const sim::Trajectory<3>&);
template class StageLoss<2>;
template class StageLoss<3>;

}  // namespace softbody::losses
