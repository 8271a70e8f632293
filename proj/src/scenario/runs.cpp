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

#include "softbody/scenario/runs.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <type_traits>

#include <fmt/format.h>
#include <fmt/os.h>

#include "json.hpp"
#include "softbody/adjoint/problem.hpp"
#include "softbody/optimizer/checkpoint.hpp"
#include "softbody/scenario/scenario.hpp"

namespace softbody::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class F>
decltype(auto) with_dim(int dim, F&& f) {
  if (dim == 2) return f(std::integral_constant<int, 2>{});
  if (dim == 3) return f(std::integral_constant<int, 3>{});
  throw ConfigError("sim.dim must be 2 or 3");
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

template <class A>
json to_json_array(const A& a) {
  json j = json::array();
  for (auto v : a) j.push_back(v);
  return j;
}

// Layout, signals, trajectory and per-boundary CSVs of one design.
template <int Dim>
Real write_design_outputs(const adjoint::SoftBodyProblem<Dim>& problem,
                          const design::DerivedDesign& derived, const std::vector<int>& subset,
                          const std::string& dir, bool layout, bool signals, bool trajectory,
                          long* frames = nullptr) {
  const auto& setup = problem.setup();
  if (layout) design::write_layout_csv(derived, setup.positions, join(dir, "layout.csv"));
  if (signals) design::write_signals_csv(derived, setup.params.dt, join(dir, "signals.csv"));
  if (!trajectory) return 0.0;
  Real loss = 0.0;
  const sim::Trajectory<Dim> traj = problem.simulate(derived, subset, &loss);
  const long n = subset.empty() ? problem.n_par() : static_cast<long>(subset.size());
  sim::write_trajectory<Dim>(traj, n, setup.params.frame_stride, join(dir, "trajectory.bin"),
                             join(dir, "trajectory.json"));
  sim::write_com_csv<Dim>(traj, join(dir, "com.csv"));
  for (std::size_t b = 0; b < traj.contact_names.size(); ++b) {
    sim::write_contact_csv<Dim>(traj, b, join(dir, "contact_" + traj.contact_names[b] + ".csv"));
  }
  if (frames != nullptr) *frames = static_cast<long>(traj.frames.size());
  return loss;
}

struct LoadedRun {
  ScenarioConfig config;
  std::optional<optimizer::OptimizerCheckpoint> checkpoint;
};

LoadedRun load_run(const std::string& run_dir, const RunOptions& options) {
  LoadedRun run;
  const std::string cfg = join(run_dir, "config.yaml");
  if (!fs::exists(cfg)) throw ConfigError("not a run directory (no config.yaml): " + run_dir);
  run.config = load_config(cfg);
  apply_options(run.config, options);
  const std::string ckpt = join(run_dir, "checkpoint.sb4d");
  if (fs::exists(ckpt)) run.checkpoint = optimizer::load_checkpoint(ckpt);
  return run;
}

template <int Dim>
design::DesignVariables run_design(const LoadedRun& run,
                                   const adjoint::SoftBodyProblem<Dim>& problem) {
  design::DesignVariables v = problem.zero_design();
  if (run.checkpoint) v.unflatten(run.checkpoint->x);
  return v;
}

}  // namespace

void apply_options(ScenarioConfig& config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.deterministic) config.sim.scatter = sim::ScatterMode::kDeterministic;
  if (options.segment_len) config.segment_len = *options.segment_len;
  if (options.threads > 0) omp_set_num_threads(options.threads);
  finalize_and_validate(config);
}

SimulateResult run_simulate(ScenarioConfig config, const std::string& out_dir,
                            const std::string& signals_csv, const RunOptions& options) {
  if (!signals_csv.empty()) config.signal_override = signals_csv;
  apply_options(config, options);
  fs::create_directories(out_dir);
  save_config(config, join(out_dir, "config.yaml"));
  return with_dim(config.sim.dim, [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    adjoint::SoftBodyProblem<Dim> problem(make_setup<Dim>(config));
    const design::DerivedDesign derived = problem.derive(problem.zero_design());
    SimulateResult r;
    r.particles = problem.n_par();
    r.task_loss = write_design_outputs<Dim>(problem, derived, {}, out_dir, true, true, true,
                                            &r.frames);
    json s;
    s["command"] = "simulate";
    s["scenario"] = config.name;
    s["task_loss"] = r.task_loss;
    s["particles"] = r.particles;
    s["frames"] = r.frames;
    write_json(s, join(out_dir, "summary.json"));
    return r;
  });
}

OptimizeResult run_optimize(ScenarioConfig config, const std::string& out_dir,
                            const std::string& resume_path, long max_iters,
                            const RunOptions& options) {
  apply_options(config, options);
  fs::create_directories(out_dir);
  save_config(config, join(out_dir, "config.yaml"));
  const std::string tag = to_yaml(config);
  return with_dim(config.sim.dim, [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    adjoint::SoftBodyProblem<Dim> problem(make_setup<Dim>(config));
    const auto plan = adjoint::CheckpointPlan::make(config.sim.n_steps, config.segment_len);
    DesignProblem<Dim> dp(config, problem, plan);
    std::mt19937_64 rng(config.seed);
    const VectorX x0 = initial_design(config, problem.n_par(), rng).flatten();
    optimizer::ALOptimizer opt(dp, config.optimizer, x0);
    if (!resume_path.empty()) {
      const optimizer::OptimizerCheckpoint ckpt = optimizer::load_checkpoint(resume_path);
      if (ckpt.tag != tag) {
        throw ConfigError("checkpoint " + resume_path + " was written for a different configuration");
      }
      optimizer::restore_checkpoint(opt, ckpt);
      std::istringstream ss(ckpt.rng_state);
      ss >> rng;
    }
    const std::string ckpt_path = join(out_dir, "checkpoint.sb4d");
    const auto names = dp.constraint_names();
    auto save = [&] {
      optimizer::save_checkpoint(optimizer::make_checkpoint(opt, rng_state(rng), tag), ckpt_path);
      optimizer::write_convergence_csv(opt.log(), names, join(out_dir, "convergence.csv"));
    };
    const optimizer::RunStatus status = opt.run(max_iters, [&](const optimizer::LogRow& row) {
      if (!options.quiet) {
        fmt::print("iter {:5d}  L {:+.6e}  L_task {:+.6e}  C [{:.4f} {:.4f} {:.4f} {:.4f}]\n",
                   row.iter, row.objective, row.task_loss, row.constraint_values[0],
                   row.constraint_values[1], row.constraint_values[2], row.constraint_values[3]);
        std::fflush(stdout);
      }
      if (row.iter % config.checkpoint_every == 0) save();
    });
    save();

    const design::DesignVariables vars = dp.unpack(opt.x());
    problem.set_gravity(gravity_at(config, std::max(0L, opt.al().s - 1)));
    const adjoint::Evaluation ev = problem.evaluate(vars, opt.al().kappa, opt.al().tau);
    OptimizeResult r;
    r.status = status;
    r.iterations = opt.al().s;
    r.objective = ev.objective;
    r.task_loss = ev.task_loss;
    r.feasible = true;
    for (int m = 0; m < 4; ++m) {
      r.constraints[m] = ev.constraints.value[m];
      r.tolerances[m] = config.task.tolerance[m];
      if (ev.constraints.penalty[m] > 0.0) r.feasible = false;
    }
    write_design_outputs<Dim>(problem, problem.derive(vars), {}, out_dir, true, true, true);

    json s;
    s["command"] = "optimize";
    s["scenario"] = config.name;
    s["status"] = status == optimizer::RunStatus::kFeasible     ? "feasible"
                  : status == optimizer::RunStatus::kInfeasible ? "infeasible"
                                                                : "paused";
    s["iterations"] = r.iterations;
    s["objective"] = r.objective;
    s["task_loss"] = r.task_loss;
    s["constraints"] = to_json_array(r.constraints);
    s["tolerances"] = to_json_array(r.tolerances);
    s["feasible"] = r.feasible;
    s["kappa"] = opt.al().kappa;
    s["tau"] = opt.al().tau;
    write_json(s, join(out_dir, "summary.json"));
    return r;
  });
}

GradcheckReport run_gradcheck(ScenarioConfig config, long samples, Real h,
                              const std::string& report_csv, const RunOptions& options) {
  if (samples < 1) throw ConfigError("--samples must be >= 1");
  if (!(h > 0.0)) throw ConfigError("--h must be positive");
  apply_options(config, options);
  return with_dim(config.sim.dim, [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    adjoint::SoftBodyProblem<Dim> problem(make_setup<Dim>(config));
    std::mt19937_64 rng(config.seed);
    design::DesignVariables vars = initial_design(config, problem.n_par(), rng);
    // Interior point away from the zero design's symmetries.
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    std::normal_distribution<double> normal(0.0, 0.5);
    for (long i = 0; i < vars.phi.size(); ++i) vars.phi[i] = uni(rng);
    for (long i = 0; i < vars.Z.size(); ++i) vars.Z(i) = normal(rng);
    const std::vector<Real> kappa(losses::kNumConstraints, 0.1);
    const std::vector<Real> tau(losses::kNumConstraints, 1.0);

    const auto plan = adjoint::CheckpointPlan::make(config.sim.n_steps, config.segment_len);
    const VectorX grad = problem.gradient(vars, kappa, tau, plan).grad.flatten();

    const auto blocks = design::block_ranges(vars);
    std::vector<long> indices;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const long want = samples / 4 + (static_cast<long>(b) < samples % 4 ? 1 : 0);
      std::vector<long> pool(blocks[b].end - blocks[b].begin);
      std::iota(pool.begin(), pool.end(), blocks[b].begin);
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(std::min<long>(want, static_cast<long>(pool.size())));
      std::sort(pool.begin(), pool.end());
      indices.insert(indices.end(), pool.begin(), pool.end());
    }
    const auto fd = adjoint::finite_diff_gradient<Dim>(problem, vars, kappa, tau, indices, h);

    GradcheckReport report;
    const Real floor = 1e-6 * grad.cwiseAbs().maxCoeff();
    for (const auto& e : fd) {
      GradcheckEntry g;
      g.var = e.block;
      g.index = e.local;
      g.analytic = grad[e.index];
      g.fd = e.fd;
      g.error = e.error;
      g.branch_flag = e.branch_crossing || !e.error.empty();
      g.rel_err = adjoint::relative_error(g.analytic, g.fd, std::max(floor, 1e-300));
      if (g.branch_flag) {
        ++report.flagged;
      } else {
        ++report.smooth;
        report.max_smooth_rel_err = std::max(report.max_smooth_rel_err, g.rel_err);
        if (!(g.rel_err < report.tolerance)) ++report.smooth_failures;
      }
      report.entries.push_back(std::move(g));
    }
    if (!report_csv.empty()) {
      const fs::path parent = fs::path(report_csv).parent_path();
      if (!parent.empty()) fs::create_directories(parent);
      auto out = fmt::output_file(report_csv);
      out.print("var,index,analytic,fd,rel_err,branch_flag\n");
      for (const auto& g : report.entries) {
        out.print("{},{},{:.17g},{:.17g},{:.17g},{}\n", g.var, g.index, g.analytic, g.fd,
                  g.rel_err, g.branch_flag ? 1 : 0);
      }
    }
    return report;
  });
}

void run_export(const std::string& run_dir, const std::string& what, const RunOptions& options) {
  const LoadedRun run = load_run(run_dir, options);
  if (what == "convergence") {
    if (!run.checkpoint) throw ConfigError("run has no checkpoint.sb4d to export convergence from");
    optimizer::write_convergence_csv(run.checkpoint->log,
                                     {"C_mat", "C_act", "C_pul_sgn", "C_pul_abs"},
                                     join(run_dir, "convergence.csv"));
    return;
  }
  if (what != "layout" && what != "signals" && what != "trajectory") {
    throw ConfigError("--what must be one of layout, signals, trajectory, convergence");
  }
  with_dim(run.config.sim.dim, [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    adjoint::SoftBodyProblem<Dim> problem(make_setup<Dim>(run.config));
    const design::DerivedDesign derived = problem.derive(run_design<Dim>(run, problem));
    write_design_outputs<Dim>(problem, derived, {}, run_dir, what == "layout", what == "signals",
                              what == "trajectory");
  });
}

PostprocessResult run_postprocess(const std::string& run_dir, const RunOptions& options) {
  const LoadedRun run = load_run(run_dir, options);
  const ScenarioConfig& config = run.config;
  const std::string out_dir = join(run_dir, "postprocess");
  fs::create_directories(out_dir);
  return with_dim(config.sim.dim, [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    const adjoint::ProblemSetup<Dim> setup = make_setup<Dim>(config);
    adjoint::SoftBodyProblem<Dim> problem(setup);
    const design::DesignVariables vars = run_design<Dim>(run, problem);
    const design::DerivedDesign derived = problem.derive(vars);
    design::DerivedDesign binary = design::binarize_postprocess(derived, config.pulse, config.sim);
    if (setup.signal_override) design::apply_signal_override(binary, *setup.signal_override, config.sim);
    const std::vector<int> solid = design::solid_particles(binary);
    if (solid.empty()) throw InstabilityError("binarized design holds no solid particles", 0);

    PostprocessResult r;
    problem.simulate(derived, {}, &r.optimized_task_loss);
    r.binarized_task_loss = write_design_outputs<Dim>(problem, binary, solid, out_dir, true, true, true);
    const design::DesignVariables bvars = design::binarize_variables(vars);
    r.binarized_constraints = {losses::c_mat(binary.gamma), losses::c_act(binary.xi),
                               losses::c_pul(bvars.A_sgn), losses::c_pul(bvars.A_abs)};
    r.solid_particles = static_cast<long>(solid.size());

    json s;
    s["command"] = "postprocess";
    s["scenario"] = config.name;
    s["optimized_task_loss"] = r.optimized_task_loss;
    s["binarized_task_loss"] = r.binarized_task_loss;
    s["binarized_constraints"] = to_json_array(r.binarized_constraints);
    s["solid_particles"] = r.solid_particles;
    write_json(s, join(out_dir, "summary.json"));
    return r;
  });
}

}  // namespace softbody::scenario
