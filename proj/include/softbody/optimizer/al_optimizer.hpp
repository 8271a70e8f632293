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

// Augmented-Lagrangian outer loop with Adam inner loops, written as a
// resumable state machine: every call to step() performs one design update,
// and the whole state can be saved and restored between calls.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "softbody/common.hpp"
#include "softbody/optimizer/adam.hpp"

namespace softbody::optimizer {

struct EvalResult {
  Real objective = 0.0;  // augmented Lagrangian
  Real task_loss = 0.0;
  std::vector<Real> constraint_values;
  std::vector<Real> penalties;
  VectorX gradient;  // of the augmented Lagrangian
};

/// What the optimizer needs from a problem.
class OptimizationProblem {
 public:
  virtual ~OptimizationProblem() = default;
  virtual int n_constraints() const = 0;
  virtual std::vector<std::string> constraint_names() const;
  virtual EvalResult evaluate(const VectorX& x, const std::vector<Real>& kappa,
                              const std::vector<Real>& tau) = 0;
  /// Constraint violations max(0, C_m - C*_m) at x.
  virtual std::vector<Real> penalties(const VectorX& x) = 0;
  /// Side constraints.
  virtual void clamp(VectorX& x) const = 0;
  /// Schedule hook run before the evaluation of iteration s (0-based).
  virtual void before_iteration(long /*s*/) {}
};

struct OptimizerSettings {
  Real tau0 = 0.001;
  Real c = 0.25;
  Real a = 10.0;
  Real step_size = 0.01;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  long s_max = 5000;
  int window = 10;
  Real rel_tol = 1e-3;

  bool operator==(const OptimizerSettings&) const = default;
};

/// One row of the convergence log.
struct LogRow {
  long iter = 0;
  Real objective = 0.0;
  Real task_loss = 0.0;
  std::vector<Real> constraint_values;
  std::vector<Real> kappa;
  std::vector<Real> tau;
};

struct ALState {
  std::vector<Real> kappa;
  std::vector<Real> tau;
  std::vector<Real> v_prev;
  long s = 0;
  long outer = 0;          // completed inner loops
  bool inner_active = false;
  bool finished = false;
  bool feasible = false;
  std::vector<Real> history;  // augmented Lagrangian values of the current inner loop
};

enum class RunStatus { kFeasible, kInfeasible, kPaused };

class ALOptimizer {
 public:
  ALOptimizer(OptimizationProblem& problem, const OptimizerSettings& settings, VectorX x0);

  /// Performs one design update. Returns false once the run has terminated.
  bool step();

  /// Steps until termination or until max_iters more updates were made
  /// (max_iters < 0: no limit).
  RunStatus run(long max_iters = -1,
                const std::function<void(const LogRow&)>& on_iteration = nullptr);

  RunStatus status() const;
  const VectorX& x() const { return x_; }
  const ALState& al() const { return al_; }
  const AdamState& adam() const { return adam_; }
  const std::vector<LogRow>& log() const { return log_; }
  const OptimizerSettings& settings() const { return settings_; }

  /// Restores a saved state; the problem and settings stay as constructed.
  void restore(VectorX x, AdamState adam, ALState al, std::vector<LogRow> log);

 private:
  void finish_inner_loop();

  OptimizationProblem& problem_;
  OptimizerSettings settings_;
  VectorX x_;
  AdamState adam_;
  ALState al_;
  std::vector<LogRow> log_;
};

/// Writes `iter,L_task,<constraint names>,kappa_1..M,tau_1..M`.
void write_convergence_csv(const std::vector<LogRow>& log, const std::vector<std::string>& names,
                           const std::string& path);

}  // namespace softbody::optimizer
