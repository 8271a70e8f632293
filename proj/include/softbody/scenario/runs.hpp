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

// Run orchestration behind the CLI subcommands. Each run writes into one
// output directory:
//   config.yaml        resolved configuration
//   layout.csv         px,py[,pz],gamma,actuator_argmax,xi_0..xi_N
//   signals.csv        t,u_1..u_N
//   trajectory.bin/.json, com.csv, contact_<boundary>.csv
//   convergence.csv    (optimize) iter,L_task,C_*,kappa_*,tau_*
//   checkpoint.sb4d    (optimize) resumable optimizer state
//   summary.json

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softbody/optimizer/al_optimizer.hpp"
#include "softbody/scenario/config.hpp"

namespace softbody::scenario {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitInstability = 3,
  kExitInfeasible = 4,
  kExitGradcheckFailed = 5,
};

/// Global CLI flags.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: OpenMP default
  bool deterministic = false;
  std::optional<long> segment_len;
  bool quiet = false;
};

/// Applies the global flags to a config and the OpenMP runtime.
void apply_options(ScenarioConfig& config, const RunOptions& options);

struct SimulateResult {
  Real task_loss = 0.0;
  long particles = 0;
  long frames = 0;
};

/// Forward run of the zero design (or of the signal table when given).
SimulateResult run_simulate(ScenarioConfig config, const std::string& out_dir,
                            const std::string& signals_csv, const RunOptions& options);

struct OptimizeResult {
  optimizer::RunStatus status = optimizer::RunStatus::kPaused;
  long iterations = 0;  // total, including resumed ones
  Real objective = 0.0;
  Real task_loss = 0.0;
  std::array<Real, 4> constraints{};
  std::array<Real, 4> tolerances{};
  bool feasible = false;  // all constraints within tolerance at the final design
};

/// Runs (or resumes) the optimizer. max_iters < 0: until termination.
OptimizeResult run_optimize(ScenarioConfig config, const std::string& out_dir,
                            const std::string& resume_path, long max_iters,
                            const RunOptions& options);

struct GradcheckEntry {
  std::string var;
  long index = 0;
  Real analytic = 0.0;
  Real fd = 0.0;
  Real rel_err = 0.0;
  bool branch_flag = false;
  std::string error;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  long smooth = 0;
  long smooth_failures = 0;
  long flagged = 0;
  Real max_smooth_rel_err = 0.0;
  Real tolerance = 1e-3;
  bool passed() const { return smooth_failures == 0 && smooth > 0; }
};

/// Analytic vs central-difference gradient on `samples` entries spread over
/// the four variable blocks. Writes `var,index,analytic,fd,rel_err,branch_flag`
/// to report_csv when nonempty.
GradcheckReport run_gradcheck(ScenarioConfig config, long samples, Real h,
                              const std::string& report_csv, const RunOptions& options);

/// Regenerates one artifact of a run directory: layout, signals, trajectory
/// or convergence.
void run_export(const std::string& run_dir, const std::string& what, const RunOptions& options);

struct PostprocessResult {
  Real optimized_task_loss = 0.0;
  Real binarized_task_loss = 0.0;
  std::array<Real, 4> binarized_constraints{};
  long solid_particles = 0;
};

/// Binarizes the run's final design, keeps the solid particles and
/// re-simulates. Output goes to <run_dir>/postprocess.
PostprocessResult run_postprocess(const std::string& run_dir, const RunOptions& options);

}  // namespace softbody::scenario
