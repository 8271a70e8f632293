// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "checks.hpp"
#include "softbody/adjoint/problem.hpp"
#include "softbody/losses/losses.hpp"
#include "softbody/scenario/runs.hpp"
#include "softbody/scenario/scenario.hpp"
#include "softbody/sim/params.hpp"

namespace adj = softbody::adjoint;
namespace sc = softbody::scenario;
namespace sim = softbody::sim;
using softbody::MatrixX;
using softbody::Real;
using softbody::VectorX;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> check;
};

Outcome cfl() {
  sim::SimParams p;
  p.dx = 0.01;
  const auto mat = sim::MaterialConstants::from_elastic(1000.0, 1e5, 0.4, 1e-5);
  const double dt = sim::cfl_max_dt(p, mat);
  return {std::abs(dt - 6.8e-4) <= 0.02 * 6.8e-4, fmt::format("dt_max = {:.4e} s", dt)};
}

Outcome constraint_extremes() {
  const double m = softbody::losses::c_mat(VectorX::Constant(1600, 0.5));
  const double a = softbody::losses::c_act(MatrixX::Constant(5, 1600, 0.2));
  const double p = softbody::losses::c_pul(MatrixX::Zero(20, 4));
  return {m == 0.25 && a == 0.8 && p == 1.0,
          fmt::format("c_mat = {:.17g}, c_act = {:.17g}, c_pul = {:.17g}", m, a, p)};
}

Outcome dot_products() {
  const auto results = softbody::testing::dot_product_checks(100, 20260915);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (!(r.max_rel_err <= worst)) {
      worst = r.max_rel_err;
      worst_name = r.name;
    }
  }
  return {worst < 1e-10 && !results.empty(),
          fmt::format("{} operators x 100 pairs, worst {:.2e} ({})", results.size(), worst,
                      worst_name)};
}

Outcome gradcheck(const std::string& workdir) {
  sc::RunOptions options;
  options.quiet = true;
  const auto r = sc::run_gradcheck(sc::load_config("tiny"), 50, 1e-5,
                                   workdir + "/gradcheck_tiny.csv", options);
  return {r.passed() && r.max_smooth_rel_err < 1e-3,
          fmt::format("{} smooth entries, max rel err {:.2e}, {} branch-crossing excluded",
                      r.smooth, r.max_smooth_rel_err, r.flagged)};
}

Outcome checkpoint_equivalence() {
  const auto config = sc::load_config("tiny");
  const adj::SoftBodyProblem<2> problem(sc::make_setup<2>(config));
  std::mt19937_64 rng(11);
  auto vars = sc::initial_design(config, problem.n_par(), rng);
  std::normal_distribution<Real> n(0.0, 0.3);
  for (long i = 0; i < vars.phi.size(); ++i) vars.phi[i] = std::clamp(n(rng), -1.0, 1.0);
  for (long i = 0; i < vars.Z.size(); ++i) vars.Z(i) = n(rng);
  const std::vector<Real> kappa{-0.1, 0.0, -0.2, 0.0};
  const std::vector<Real> tau{1.0, 10.0, 1.0, 100.0};
  const long steps = config.sim.n_steps;
  const auto ref = problem.gradient(vars, kappa, tau, adj::CheckpointPlan::make(steps, steps));
  bool same = true;
  for (long seg : {1L, 7L}) {
    const auto g = problem.gradient(vars, kappa, tau, adj::CheckpointPlan::make(steps, seg));
    same = same && g.grad == ref.grad && g.objective == ref.objective;
  }
  return {same, fmt::format("segment lengths 1, 7, {}: {}", steps,
                            same ? "bit-identical" : "gradients differ")};
}

Outcome physics() {
  const auto f = softbody::testing::free_fall_check();
  const auto r = softbody::testing::resting_block_check();
  const bool pass = f.max_com_err < 1e-10 && r.drift < 1e-4 && r.contact_rel_err < 0.02;
  return {pass, fmt::format("free-fall com err {:.1e}, resting drift {:.2e} m "
                            "(oscillation {:.2e} m), contact err {:.2f}%",
                            f.max_com_err, r.drift, r.oscillation, 100.0 * r.contact_rel_err)};
}

Outcome toy() {
  const auto r = softbody::testing::toy_constrained_problem();
  return {r.feasible && r.penalty == 0.0 && std::abs(r.p) <= 0.06,
          fmt::format("p = {:.5f}, penalty {:.1e}, {} iterations", r.p, r.penalty, r.iterations)};
}

double first_task_loss(const std::string& convergence_csv) {
  std::ifstream in(convergence_csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto a = line.find(',');
  const auto b = line.find(',', a + 1);
  return std::stod(line.substr(a + 1, b - a - 1));
}

sc::OptimizeResult mini_walker_run;
bool mini_walker_done = false;

Outcome mini_walker(const std::string& workdir) {
  sc::RunOptions options;
  options.quiet = true;
  const std::string out = workdir + "/mini_walker";
  std::filesystem::remove_all(out);
  mini_walker_run = sc::run_optimize(sc::load_config("mini_walker"), out, "", -1, options);
  mini_walker_done = true;
  const auto& r = mini_walker_run;
  const double initial = first_task_loss(out + "/convergence.csv");
  const bool pass = r.task_loss <= -0.02 && r.feasible;
  return {pass, fmt::format("{} iterations, L_task {:.4f} m (initial {:.1e}), "
                            "C = [{:.5f} {:.5f} {:.5f} {:.5f}] vs [{} {} {} {}]",
                            r.iterations, r.task_loss, initial, r.constraints[0], r.constraints[1],
                            r.constraints[2], r.constraints[3], r.tolerances[0], r.tolerances[1],
                            r.tolerances[2], r.tolerances[3])};
}

Outcome postprocess(const std::string& workdir) {
  if (!mini_walker_done) return {false, "mini-walker run missing"};
  sc::RunOptions options;
  options.quiet = true;
  const auto r = sc::run_postprocess(workdir + "/mini_walker", options);
  const double kept = r.binarized_task_loss / r.optimized_task_loss;
  return {r.optimized_task_loss < 0.0 && kept >= 0.5,
          fmt::format("optimized {:.4f}, binarized {:.4f} ({:.0f}% kept), {} solid particles",
                      r.optimized_task_loss, r.binarized_task_loss, 100.0 * kept,
                      r.solid_particles)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance suite");
  std::string workdir = "acceptance_runs";
  std::string only;
  app.add_option("--workdir", workdir, "directory for run outputs");
  app.add_option("--only", only, "run the criteria whose name contains this string");
  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(workdir);

  const std::vector<Criterion> criteria = {
      {"cfl_reproduction", 1.0, cfl},
      {"constraint_extremes", 1.0, constraint_extremes},
      {"kernel_dot_products", 60.0, dot_products},
      {"end_to_end_gradcheck", 300.0, [&] { return gradcheck(workdir); }},
      {"checkpoint_equivalence", 300.0, checkpoint_equivalence},
      {"physics_sanity", 120.0, physics},
      {"toy_constrained_optimization", 60.0, toy},
      {"mini_walker", 3600.0, [&] { return mini_walker(workdir); }},
      {"postprocess_fidelity", 3600.0, [&] { return postprocess(workdir); }},
  };

  int failures = 0;
  double mini_walker_seconds = 0.0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name.find(only) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // post-processing shares the mini-walker budget
    if (c.name == "mini_walker") mini_walker_seconds = seconds;
    const double charged = c.name == "postprocess_fidelity" ? seconds + mini_walker_seconds : seconds;
    const bool in_budget = charged <= c.budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    fmt::print("{} {}: {} [{:.1f} s{}]\n", pass ? "PASS" : "FAIL", c.name, o.detail, seconds,
               in_budget ? "" : fmt::format(", over {:.0f} s budget", c.budget_s));
    std::fflush(stdout);
  }
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
