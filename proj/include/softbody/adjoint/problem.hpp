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

// The full design-to-loss pipeline of one scenario, its reverse-mode gradient
// with segment checkpointing, and a central-difference oracle.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/design/design.hpp"
#include "softbody/losses/losses.hpp"
#include "softbody/sim/simulator.hpp"

namespace softbody::adjoint {

using design::DesignVariables;
using losses::kNumConstraints;

/// Segment layout of the reverse sweep: one particle snapshot per segment
/// start, states inside a segment recomputed on demand.
struct CheckpointPlan {
  long n_steps = 0;
  long segment_len = 1;

  long n_segments() const { return n_steps == 0 ? 0 : (n_steps + segment_len - 1) / segment_len; }
  /// segment_len <= 0 selects round(sqrt(n_steps)).
  static CheckpointPlan make(long n_steps, long segment_len = 0);
};

/// Instrumentation of one gradient evaluation.
struct CheckpointStats {
  long peak_snapshots = 0;      // segment-start snapshots alive at once
  long peak_segment_states = 0; // recomputed states buffered for one segment
  long recomputed_steps = 0;
};

struct ConstraintValues {
  std::array<Real, kNumConstraints> value{};    // C_m
  std::array<Real, kNumConstraints> penalty{};  // max(0, C_m - C*_m)
};

/// Forward-only evaluation.
struct Evaluation {
  Real objective = 0.0;  // augmented Lagrangian
  Real task_loss = 0.0;
  ConstraintValues constraints;
  sim::BranchLog branches;
};

struct GradientResult {
  DesignVariables grad;  // d objective / d variables, same shapes as the variables
  Real objective = 0.0;
  Real task_loss = 0.0;
  ConstraintValues constraints;
};

/// Static description of a scenario, in the dimension of the simulation.
template <int Dim>
struct ProblemSetup {
  sim::SimParams params;
  std::vector<sim::BoundarySpec> boundaries;
  sim::MaterialConstants mat;
  MatrixX positions;  // reference design-particle positions, one row per particle
  Real vol0 = 0.0;
  Real filter_radius = 0.015;
  Real filter_power = 2.0;
  design::PulseParams pulse;
  design::DesignMapParams map;
  int n_act = 4;
  losses::TaskSpec task;  // tip_set is derived per run
  std::optional<MatrixX> signal_override;  // columns t, u_1..u_N
};

template <int Dim>
class SoftBodyProblem {
 public:
  explicit SoftBodyProblem(ProblemSetup<Dim> setup);

  const ProblemSetup<Dim>& setup() const { return setup_; }
  const design::FilterSpec& filter() const { return filter_; }
  long n_par() const { return setup_.positions.rows(); }

  /// Gravity can change between evaluations (schedule hooks).
  void set_gravity(const Eigen::Vector3d& g) { setup_.params.gravity = g; }

  DesignVariables zero_design() const;

  /// Derived design including any signal override.
  design::DerivedDesign derive(const DesignVariables& vars) const;

  ConstraintValues constraints(const DesignVariables& vars,
                               const design::DerivedDesign& derived) const;

  /// Simulated body built from a derived design; `subset` selects design
  /// particles (all when empty).
  design::Body<Dim> build_body(const design::DerivedDesign& derived,
                               const std::vector<int>& subset = {}) const;

  /// Task spec with the tip set resolved for the given body.
  losses::TaskSpec task_for(const design::Body<Dim>& body) const;

  Evaluation evaluate(const DesignVariables& vars, const std::vector<Real>& kappa,
                      const std::vector<Real>& tau) const;

  GradientResult gradient(const DesignVariables& vars, const std::vector<Real>& kappa,
                          const std::vector<Real>& tau, const CheckpointPlan& plan,
                          CheckpointStats* stats = nullptr) const;

  /// Forward run with full recording, for output files and post-processing.
  sim::Trajectory<Dim> simulate(const design::DerivedDesign& derived,
                                const std::vector<int>& subset = {},
                                Real* task_loss = nullptr) const;

 private:
  ProblemSetup<Dim> setup_;
  design::FilterSpec filter_;
};

/// Topmost row (largest coordinate along axis 1) of the body's initial state.
template <int Dim>
std::vector<long> top_row(const sim::ParticleState<Dim>& s);

/// One sampled entry of the finite-difference oracle.
struct FdEntry {
  long index = 0;    // flat design-variable index
  std::string block;
  long local = 0;    // index within the block
  Real h = 0.0;
  Real fd = 0.0;     // central difference
  Real forward = 0.0;   // (L(p + h) - L(p)) / h
  Real backward = 0.0;  // (L(p) - L(p - h)) / h
  bool branch_crossing = false;
  std::string error;  // nonempty when a perturbed run failed
};

/// Central differences of the augmented Lagrangian at the given flat
/// indices. An entry is flagged as branch-crossing when the perturbed runs
/// take different contact branches than the base run, or a penalty crosses
/// its kink.
template <int Dim>
std::vector<FdEntry> finite_diff_gradient(const SoftBodyProblem<Dim>& problem,
                                          const DesignVariables& vars,
                                          const std::vector<Real>& kappa,
                                          const std::vector<Real>& tau,
                                          const std::vector<long>& indices, Real h);

/// Scalar-function form for generic use: central difference of f at p.
Real central_difference(const std::function<Real(Real)>& f, Real p, Real h);

/// |a - b| / max(|a|, |b|, floor)
Real relative_error(Real a, Real b, Real floor);

}  // namespace softbody::adjoint
