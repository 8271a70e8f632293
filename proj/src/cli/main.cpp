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

#include <cstdio>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "softbody/optimizer/adam.hpp"
#include "softbody/scenario/runs.hpp"

namespace sc = softbody::scenario;

int main(int argc, char** argv) {
  CLI::App app{"softbody: soft-body structure, actuator and actuation co-design"};
  app.require_subcommand(1);

  sc::RunOptions options;
  std::uint64_t seed = 0;
  long segment_len = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--threads", options.threads, "worker threads inside kernels")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic", options.deterministic, "bit-reproducible ordered scatter");
  auto* seg_opt = app.add_option("--segment-len", segment_len,
                                 "reverse-sweep checkpoint segment (0: sqrt of step count)")
                      ->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", options.quiet, "suppress per-iteration output");

  std::string config;
  std::string out;
  std::string signals;
  auto* simulate = app.add_subcommand("simulate", "forward run of the zero design");
  simulate->add_option("--config", config, "config file or preset name")->required();
  simulate->add_option("--out", out, "output directory")->required();
  simulate->add_option("--signals", signals, "t,u_1..u_N table replacing the actuation signals");

  std::string resume;
  long iters = -1;
  auto* optimize = app.add_subcommand("optimize", "run the constrained optimization");
  optimize->add_option("--config", config, "config file or preset name")->required();
  optimize->add_option("--out", out, "output directory")->required();
  optimize->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  optimize->add_option("--iters", iters, "stop after this many more iterations")
      ->check(CLI::PositiveNumber);

  long samples = 50;
  double h = 1e-5;
  std::string report = "gradcheck.csv";
  auto* gradcheck = app.add_subcommand("gradcheck", "compare gradients with finite differences");
  gradcheck->set_help_flag("--help", "print this help message and exit");
  gradcheck->add_option("--config", config, "config file or preset name")->required();
  gradcheck->add_option("--samples", samples, "sampled entries")->check(CLI::PositiveNumber);
  gradcheck->add_option("--h", h, "finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--report", report, "report CSV path");

  std::string run_dir;
  std::string what;
  auto* exp = app.add_subcommand("export", "regenerate one artifact of a run directory");
  exp->add_option("--run", run_dir, "run directory")->required();
  exp->add_option("--what", what, "artifact")
      ->required()
      ->check(CLI::IsMember({"layout", "signals", "trajectory", "convergence"}));

  auto* post = app.add_subcommand("postprocess", "binarize the final design and re-simulate");
  post->add_option("--run", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sc::kExitOk : sc::kExitUsage;
  }
  if (*seed_opt) options.seed = seed;
  if (*seg_opt) options.segment_len = segment_len;

  try {
    if (*simulate) {
      const auto r = sc::run_simulate(sc::load_config(config), out, signals, options);
      fmt::print("task_loss {:.10g}  particles {}  frames {}\n", r.task_loss, r.particles, r.frames);
      return sc::kExitOk;
    }
    if (*optimize) {
      const auto r = sc::run_optimize(sc::load_config(config), out, resume, iters, options);
      fmt::print("iterations {}  task_loss {:.10g}  constraints [{:.6g} {:.6g} {:.6g} {:.6g}]\n",
                 r.iterations, r.task_loss, r.constraints[0], r.constraints[1], r.constraints[2],
                 r.constraints[3]);
      return r.status == softbody::optimizer::RunStatus::kInfeasible ? sc::kExitInfeasible
                                                                     : sc::kExitOk;
    }
    if (*gradcheck) {
      const auto r = sc::run_gradcheck(sc::load_config(config), samples, h, report, options);
      fmt::print("smooth {}  flagged {}  failures {}  max_rel_err {:.3e}\n", r.smooth, r.flagged,
                 r.smooth_failures, r.max_smooth_rel_err);
      return r.passed() ? sc::kExitOk : sc::kExitGradcheckFailed;
    }
    if (*exp) {
      sc::run_export(run_dir, what, options);
      return sc::kExitOk;
    }
    if (*post) {
      const auto r = sc::run_postprocess(run_dir, options);
      fmt::print("optimized {:.10g}  binarized {:.10g}  solid {}\n", r.optimized_task_loss,
                 r.binarized_task_loss, r.solid_particles);
      return sc::kExitOk;
    }
  } catch (const softbody::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return sc::kExitConfig;
  } catch (const softbody::InstabilityError& e) {
    fmt::print(stderr, "numerical instability: {}\n", e.what());
    return sc::kExitInstability;
  } catch (const softbody::NonFiniteAdjointError& e) {
    fmt::print(stderr, "numerical instability: {}\n", e.what());
    return sc::kExitInstability;
  } catch (const softbody::optimizer::NonFiniteGradientError& e) {
    fmt::print(stderr, "numerical instability: {}\n", e.what());
    return sc::kExitInstability;
  } catch (const softbody::DomainError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return sc::kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return sc::kExitConfig;
  }
  return sc::kExitUsage;
}
