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

#include "softbody/optimizer/al_optimizer.hpp"

#include <algorithm>
#include <utility>

#include <fmt/os.h>

namespace softbody::optimizer {

std::vector<std::string> OptimizationProblem::constraint_names() const {
  std::vector<std::string> names;
  for (int m = 0; m < n_constraints(); ++m) names.push_back(fmt::format("C_{}", m + 1));
  return names;
}

ALOptimizer::ALOptimizer(OptimizationProblem& problem, const OptimizerSettings& settings,
                         VectorX x0)
    : problem_(problem), settings_(settings), x_(std::move(x0)) {
  if (!(settings_.tau0 > 0.0)) throw DomainError("tau0 must be positive");
  if (!(settings_.c > 0.0 && settings_.c < 1.0)) throw DomainError("c must lie in (0, 1)");
  if (!(settings_.a > 1.0)) throw DomainError("a must exceed 1");
  const int m = problem_.n_constraints();
  al_.kappa.assign(m, 0.0);
  al_.tau.assign(m, settings_.tau0);
  al_.v_prev = problem_.penalties(x_);
  adam_.step_size = settings_.step_size;
  adam_.beta1 = settings_.beta1;
  adam_.beta2 = settings_.beta2;
  adam_.eps = settings_.eps;
  adam_.reset(x_.size());
}

bool ALOptimizer::step() {
  if (al_.finished) return false;
  if (!al_.inner_active) {
    adam_.reset(x_.size());
    al_.history.clear();
    al_.inner_active = true;
  }
  problem_.before_iteration(al_.s);
  const EvalResult r = problem_.evaluate(x_, al_.kappa, al_.tau);
  LogRow row;
  row.iter = al_.s + 1;
  row.objective = r.objective;
  row.task_loss = r.task_loss;
  row.constraint_values = r.constraint_values;
  row.kappa = al_.kappa;
  row.tau = al_.tau;
  log_.push_back(std::move(row));
  al_.history.push_back(r.objective);
  adam_step(adam_, x_, r.gradient);
  problem_.clamp(x_);
  ++al_.s;
  if (inner_converged(al_.history, settings_.window, settings_.rel_tol) ||
      al_.s >= settings_.s_max) {
    finish_inner_loop();
  }
  return !al_.finished;
}

void ALOptimizer::finish_inner_loop() {
  al_.inner_active = false;
  ++al_.outer;
  const std::vector<Real> v = problem_.penalties(x_);
  bool feasible = true;
  for (std::size_t m = 0; m < v.size(); ++m) {
    if (!(v[m] > 0.0)) continue;
    feasible = false;
    if (v[m] < settings_.c * al_.v_prev[m]) {
      al_.kappa[m] -= al_.tau[m] * v[m];
      al_.v_prev[m] = v[m];
    } else {
      al_.tau[m] *= settings_.a;
    }
  }
  al_.feasible = feasible;
  if (feasible || al_.s >= settings_.s_max) al_.finished = true;
}

RunStatus ALOptimizer::status() const {
  if (!al_.finished) return RunStatus::kPaused;
  return al_.feasible ? RunStatus::kFeasible : RunStatus::kInfeasible;
}

RunStatus ALOptimizer::run(long max_iters, const std::function<void(const LogRow&)>& on_iteration) {
  long done = 0;
  while (!al_.finished && (max_iters < 0 || done < max_iters)) {
    step();
    ++done;
    if (on_iteration) on_iteration(log_.back());
  }
  return status();
}

void ALOptimizer::restore(VectorX x, AdamState adam, ALState al, std::vector<LogRow> log) {
  if (x.size() != x_.size()) throw ShapeError("restored design has a different size");
  if (static_cast<int>(al.kappa.size()) != problem_.n_constraints()) {
    throw ShapeError("restored multipliers have a different constraint count");
  }
  x_ = std::move(x);
  adam_ = std::move(adam);
  al_ = std::move(al);
  log_ = std::move(log);
}

void write_convergence_csv(const std::vector<LogRow>& log, const std::vector<std::string>& names,
                           const std::string& path) {
  auto out = fmt::output_file(path);
  out.print("iter,L_task");
  for (const auto& n : names) out.print(",{}", n);
  for (std::size_t m = 0; m < names.size(); ++m) out.print(",kappa_{}", m + 1);
  for (std::size_t m = 0; m < names.size(); ++m) out.print(",tau_{}", m + 1);
  out.print("\n");
  for (const auto& row : log) {
    out.print("{},{:.17g}", row.iter, row.task_loss);
    for (Real c : row.constraint_values) out.print(",{:.17g}", c);
    for (Real k : row.kappa) out.print(",{:.17g}", k);
    for (Real t : row.tau) out.print(",{:.17g}", t);
    out.print("\n");
  }
}

}  // namespace softbody::optimizer
