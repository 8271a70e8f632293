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

#include <random>
#include <string>
#include <vector>

#include "softbody/adjoint/problem.hpp"
#include "softbody/optimizer/al_optimizer.hpp"
#include "softbody/scenario/config.hpp"

namespace softbody::scenario {

/// Regular lattice at spacing dx/2 filling the design domain, cell-centered:
/// one row per particle, dim columns.
MatrixX seed_particles(const ScenarioConfig& config);

/// Reference volume of one particle, (dx/2)^dim.
Real particle_volume(const ScenarioConfig& config);

template <int Dim>
adjoint::ProblemSetup<Dim> make_setup(const ScenarioConfig& config);

/// phi = 0, Z = 0, A_sgn and A_abs i.i.d. N(0, init_std).
design::DesignVariables initial_design(const ScenarioConfig& config, long n_par,
                                       std::mt19937_64& rng);

/// Gravity at optimizer iteration s (0-based) after schedule hooks.
Eigen::Vector3d gravity_at(const ScenarioConfig& config, long s);

/// Soft-body design problem seen by the optimizer. Side constraints clamp
/// phi, A_sgn and A_abs to [-1, 1]; Z is unbounded.
template <int Dim>
class DesignProblem : public optimizer::OptimizationProblem {
 public:
  DesignProblem(const ScenarioConfig& config, adjoint::SoftBodyProblem<Dim>& problem,
                adjoint::CheckpointPlan plan);

  int n_constraints() const override { return losses::kNumConstraints; }
  std::vector<std::string> constraint_names() const override;
  optimizer::EvalResult evaluate(const VectorX& x, const std::vector<Real>& kappa,
                                 const std::vector<Real>& tau) override;
  std::vector<Real> penalties(const VectorX& x) override;
  void clamp(VectorX& x) const override;
  void before_iteration(long s) override;

  design::DesignVariables unpack(const VectorX& x) const;

 private:
  const ScenarioConfig& config_;
  adjoint::SoftBodyProblem<Dim>& problem_;
  adjoint::CheckpointPlan plan_;
  design::DesignVariables shape_;
};

}  // namespace softbody::scenario
