#include <gtest/gtest.h>

#include "checks.hpp"
#include "softbody/adjoint/problem.hpp"
#include "softbody/scenario/config.hpp"
#include "softbody/scenario/scenario.hpp"
#include "softbody/sim/simulator.hpp"

namespace sim = softbody::sim;
using softbody::Vec;

namespace {

struct Block {
  sim::ParticleState<2> state;
  sim::ParticleProps<2> props;
};

Block block(double x0, double y0, int n, double dx) {
  Block b;
  const double h = 0.5 * dx;
  const auto mat = sim::MaterialConstants::from_elastic(1000.0, 1e5, 0.4, 1e-5);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      b.state.x.push_back(Vec<2>(x0 + (i + 0.5) * h, y0 + (j + 0.5) * h));
      b.state.v.push_back(Vec<2>::Zero());
      b.state.F.push_back(softbody::Mat<2>::Identity());
      b.state.C.push_back(softbody::Mat<2>::Zero());
      b.props.mass.push_back(1000.0 * h * h);
      b.props.vol0.push_back(h * h);
      b.props.lambda.push_back(mat.lambda0);
      b.props.mu.push_back(mat.mu0);
      b.props.design_index.push_back(static_cast<int>(b.props.mass.size()) - 1);
    }
  }
  return b;
}

sim::SimParams params(double total_time, long stride = 0) {
  sim::SimParams p;
  p.dx = 0.01;
  p.dt = 1e-4;
  p.domain_length = 0.5;
  p.total_time = total_time;
  p.frame_stride = stride;
  p.finalize();
  return p;
}

TEST(FreeFall, MatchesDiscreteClosedForm) {
  const auto r = softbody::testing::free_fall_check();
  EXPECT_EQ(r.steps, 200);
  EXPECT_LT(r.max_com_err, 1e-10);
  EXPECT_LT(r.max_vel_err, 1e-10);
}

TEST(RestingBlock, StaysPutAndCarriesItsWeight) {
  const auto r = softbody::testing::resting_block_check();
  EXPECT_LT(r.drift, 1e-4);
  EXPECT_LT(r.horizontal_drift, 1e-10);
  EXPECT_LT(r.contact_rel_err, 0.02);
  EXPECT_GT(r.min_height, 0.0);
}

TEST(Equilibrium, ZeroGravityRestIsUnchanged) {
  auto p = params(0.01);
  p.gravity.setZero();
  const Block b = block(0.2, 0.2, 6, p.dx);
  sim::Simulator<2> s(p, {});
  sim::ParticleState<2> out;
  s.run(b.state, b.props, sim::Actuation{}, sim::RecordOptions{}, &out);
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    EXPECT_LT((out.x[i] - b.state.x[i]).norm(), 1e-14);
    EXPECT_LT(out.v[i].norm(), 1e-12);
    EXPECT_LT((out.F[i] - softbody::Mat<2>::Identity()).norm(), 1e-12);
  }
}

TEST(Simulator, RepeatedRunsAreBitIdentical) {
  const auto p = params(0.02);
  sim::BoundarySpec floor;
  floor.plane = 0.03;
  floor.mode = sim::BoundaryMode::kCoulomb;
  floor.friction = 0.5;
  Block b = block(0.2, 0.035, 8, p.dx);
  for (auto& v : b.state.v) v = Vec<2>(0.4, -0.3);
  sim::Simulator<2> s(p, {floor});
  sim::ParticleState<2> a, c;
  const auto ta = s.run(b.state, b.props, sim::Actuation{}, sim::RecordOptions{}, &a);
  const auto tc = s.run(b.state, b.props, sim::Actuation{}, sim::RecordOptions{}, &c);
  EXPECT_EQ(ta.com, tc.com);
  EXPECT_EQ(a.x, c.x);
  EXPECT_EQ(a.F, c.F);
}

TEST(Simulator, FrameCountFollowsStride) {
  const auto p = params(0.01, 10);
  ASSERT_EQ(p.n_steps, 100);
  const Block b = block(0.2, 0.2, 4, p.dx);
  sim::Simulator<2> s(p, {});
  const auto t = s.run(b.state, b.props, sim::Actuation{}, sim::RecordOptions{});
  ASSERT_EQ(t.frames.size(), 11u);
  EXPECT_EQ(t.frames.front().step, 0);
  EXPECT_EQ(t.frames.back().step, 100);
  EXPECT_EQ(t.com.size(), 101u);
  EXPECT_EQ(t.contact.size(), 0u);
}

TEST(Simulator, DroppedBlockNeverPenetratesFloor) {
  const auto p = params(0.15, 5);
  sim::BoundarySpec floor;
  floor.plane = 0.03;
  floor.mode = sim::BoundaryMode::kNoSlip;
  const Block b = block(0.2, 0.06, 10, p.dx);
  sim::Simulator<2> s(p, {floor});
  const auto t = s.run(b.state, b.props, sim::Actuation{}, sim::RecordOptions{});
  double lowest = 1.0;
  for (const auto& f : t.frames) {
    for (const auto& x : f.x) lowest = std::min(lowest, x.y());
  }
  EXPECT_GT(lowest, floor.plane);
}

TEST(Walker, SolidUnactuatedBodyOnlySags) {
  const auto config = softbody::scenario::load_config("walker2d");
  const softbody::adjoint::SoftBodyProblem<2> problem(softbody::scenario::make_setup<2>(config));
  auto derived = problem.derive(problem.zero_design());
  derived.gamma.setOnes();
  derived.u_hat.setZero();
  const auto t = problem.simulate(derived);
  EXPECT_LT(std::abs(t.com.back().x() - t.com.front().x()), 1e-3);
  EXPECT_LT(t.com.back().y(), t.com.front().y());
}

}  // namespace
