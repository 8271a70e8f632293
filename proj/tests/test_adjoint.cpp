#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "softbody/adjoint/problem.hpp"
#include "softbody/scenario/runs.hpp"
#include "softbody/scenario/scenario.hpp"

namespace adj = softbody::adjoint;
namespace sc = softbody::scenario;
using softbody::Real;

namespace {

struct TinyFixture {
  TinyFixture() : config(sc::load_config("tiny")), problem(sc::make_setup<2>(config)) {
    std::mt19937_64 rng(11);
    vars = sc::initial_design(config, problem.n_par(), rng);
    std::normal_distribution<Real> n(0.0, 0.3);
    for (long i = 0; i < vars.phi.size(); ++i) vars.phi[i] = std::clamp(n(rng), -1.0, 1.0);
    for (long i = 0; i < vars.Z.size(); ++i) vars.Z(i) = n(rng);
  }
  sc::ScenarioConfig config;
  adj::SoftBodyProblem<2> problem;
  adj::DesignVariables vars;
  std::vector<Real> kappa{-0.1, 0.0, -0.2, 0.0};
  std::vector<Real> tau{1.0, 10.0, 1.0, 100.0};
};

TEST(CheckpointPlan, Layout) {
  const auto p = adj::CheckpointPlan::make(50);
  EXPECT_EQ(p.segment_len, 7);
  EXPECT_EQ(p.n_segments(), 8);
  EXPECT_EQ(adj::CheckpointPlan::make(50, 1).n_segments(), 50);
  EXPECT_EQ(adj::CheckpointPlan::make(50, 50).n_segments(), 1);
  EXPECT_EQ(adj::CheckpointPlan::make(50, 200).n_segments(), 1);
  EXPECT_EQ(adj::CheckpointPlan::make(1500).segment_len, 39);
}

TEST(Checkpointing, SegmentLengthDoesNotChangeGradient) {
  TinyFixture f;
  const long n = f.config.sim.n_steps;
  ASSERT_EQ(n, 50);
  adj::CheckpointStats full_stats;
  const auto ref = f.problem.gradient(f.vars, f.kappa, f.tau, adj::CheckpointPlan::make(n, n),
                                      &full_stats);
  EXPECT_EQ(full_stats.peak_snapshots, 1);
  for (long seg : {1L, 7L}) {
    adj::CheckpointStats stats;
    const auto plan = adj::CheckpointPlan::make(n, seg);
    const auto g = f.problem.gradient(f.vars, f.kappa, f.tau, plan, &stats);
    EXPECT_EQ(g.objective, ref.objective);
    EXPECT_TRUE(g.grad == ref.grad) << "segment " << seg;
    EXPECT_LE(stats.peak_snapshots, plan.n_segments() + 1);
    EXPECT_LE(stats.peak_segment_states, seg + 1);
  }
}

TEST(Checkpointing, GradientObjectiveMatchesForwardEvaluation) {
  TinyFixture f;
  const auto e = f.problem.evaluate(f.vars, f.kappa, f.tau);
  const auto g = f.problem.gradient(f.vars, f.kappa, f.tau,
                                    adj::CheckpointPlan::make(f.config.sim.n_steps));
  EXPECT_EQ(e.objective, g.objective);
  EXPECT_EQ(e.task_loss, g.task_loss);
  EXPECT_EQ(e.constraints.value, g.constraints.value);
}

TEST(FiniteDifference, CentralDifferenceOfCubic) {
  const auto f = [](Real x) { return x * x * x; };
  EXPECT_NEAR(adj::central_difference(f, 2.0, 1e-3), 12.0 + 1e-6, 1e-9);
}

TEST(FiniteDifference, RelativeError) {
  EXPECT_NEAR(adj::relative_error(1.0, 1.1, 1e-8), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(adj::relative_error(1e-12, 0.0, 1e-8), 1e-4);
  EXPECT_EQ(adj::relative_error(0.0, 0.0, 1e-8), 0.0);
}

TEST(Gradcheck, TinyPresetSmoothEntriesAgree) {
  auto config = sc::load_config("tiny");
  sc::RunOptions options;
  options.quiet = true;
  const auto report = sc::run_gradcheck(config, 40, 1e-5, "", options);
  EXPECT_TRUE(report.passed()) << "max smooth rel err " << report.max_smooth_rel_err;
  EXPECT_GE(report.smooth, 20);
  for (const auto& e : report.entries) {
    if (!e.branch_flag && e.error.empty()) {
      EXPECT_LE(e.rel_err, 1e-3) << e.var << "[" << e.index << "]";
    }
  }
}

}  // namespace
