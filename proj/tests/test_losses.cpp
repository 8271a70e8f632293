#include <cmath>

#include <gtest/gtest.h>

#include "softbody/design/design.hpp"
#include "softbody/losses/losses.hpp"

namespace losses = softbody::losses;
namespace sim = softbody::sim;
using softbody::MatrixX;
using softbody::Vec;
using softbody::VectorX;

namespace {

TEST(Aggregates, MassAveragedVelocityAndCenter) {
  sim::ParticleState<2> s;
  s.resize(2);
  sim::ParticleProps<2> props;
  props.mass = {1.0, 3.0};
  s.v[0] = Vec<2>(4.0, 0.0);
  s.x[0] = Vec<2>(0.0, 0.0);
  s.x[1] = Vec<2>(1.0, 0.0);
  EXPECT_DOUBLE_EQ(sim::mass_avg_velocity<2>(s, props).x(), 1.0);
  props.mass = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(sim::center_of_gravity<2>(s, props).x(), 0.5);
  s.v[1] = Vec<2>(-4.0, 0.0);
  EXPECT_EQ(sim::mass_avg_velocity<2>(s, props).x(), 0.0);
}

sim::Trajectory<2> constant_velocity_trajectory(const Vec<2>& v, double dt, long n) {
  sim::Trajectory<2> t;
  t.dt = dt;
  t.n_steps = n;
  for (long k = 0; k <= n; ++k) {
    t.mass_avg_velocity.push_back(v);
    t.com.push_back(v * (k * dt));
  }
  return t;
}

TEST(Locomotion, ConstantVelocity) {
  const auto t = constant_velocity_trajectory(Vec<2>(1.0, 0.0), 1e-3, 500);
  EXPECT_NEAR(losses::loss_locomotion<2>(t, Vec<2>(1.0, 0.0)), -0.5, 1e-12);
  EXPECT_EQ(losses::loss_locomotion<2>(t, Vec<2>(0.0, 1.0)), 0.0);
}

TEST(Locomotion, TelescopesToCenterOfMassDisplacement) {
  sim::SimParams params;
  params.dx = 0.02;
  params.dt = 2e-4;
  params.domain_length = 0.5;
  params.total_time = 0.05;
  params.finalize();
  sim::BoundarySpec floor;
  floor.plane = 0.06;
  floor.mode = sim::BoundaryMode::kCoulomb;
  floor.friction = 0.4;
  sim::ParticleState<2> s;
  sim::ParticleProps<2> props;
  const double vol = 1e-4;
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 6; ++i) {
      s.x.push_back(Vec<2>(0.2 + 0.01 * i, 0.065 + 0.01 * j));
      s.v.push_back(Vec<2>(0.3, -0.2));
      s.F.push_back(softbody::Mat<2>::Identity());
      s.C.push_back(softbody::Mat<2>::Zero());
      props.mass.push_back(1000.0 * vol * (1.0 + 0.1 * i));
      props.vol0.push_back(vol);
      props.lambda.push_back(1e4);
      props.mu.push_back(5e3);
      props.design_index.push_back(j * 6 + i);
    }
  }
  sim::Simulator<2> simulator(params, {floor});
  const auto traj = simulator.run(s, props, sim::Actuation{}, sim::RecordOptions{});
  const Vec<2> axis(1.0, 0.0);
  const double displacement = (traj.com.back() - traj.com.front()).dot(axis);
  EXPECT_GT(std::abs(displacement), 1e-3);
  EXPECT_NEAR(losses::loss_locomotion<2>(traj, axis), -displacement, 1e-10);

  losses::TaskSpec task;
  task.axis = Eigen::Vector3d(1.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(losses::task_loss<2>(task, traj), losses::loss_locomotion<2>(traj, axis));
}

TEST(Balancer, HeldAndOffsetTip) {
  sim::Trajectory<2> t;
  t.dt = 0.01;
  t.n_steps = 100;
  for (long k = 0; k <= 100; ++k) t.tip_centroid.push_back(Vec<2>(0.3, 0.4));
  EXPECT_EQ(losses::loss_balancer<2>(t), 0.0);
  for (long k = 1; k <= 100; ++k) t.tip_centroid[k] += Vec<2>(0.03, 0.04);
  EXPECT_NEAR(losses::loss_balancer<2>(t), 0.05, 1e-14);
}

sim::ParticleState<3> planar_rigid_spin(double omega, sim::ParticleProps<3>& props) {
  sim::ParticleState<3> s;
  s.resize(4);
  const Vec<3> pts[4] = {Vec<3>(0.1, 0.0, 0.0), Vec<3>(-0.1, 0.0, 0.0), Vec<3>(0.0, 0.0, 0.2),
                         Vec<3>(0.0, 0.0, -0.2)};
  props.mass = {1.0, 1.0, 2.0, 2.0};
  for (int p = 0; p < 4; ++p) {
    s.x[p] = pts[p] + Vec<3>(0.5, 0.3, 0.5);
    s.v[p] = Vec<3>(0.0, omega, 0.0).cross(pts[p]);
  }
  return s;
}

TEST(Rotator, RigidSpinGivesOmegaTimesT) {
  sim::ParticleProps<3> props;
  const double omega = 3.0;
  const auto s = planar_rigid_spin(omega, props);
  EXPECT_NEAR(sim::spin_ratio(s, props), omega, 1e-14);
  sim::Trajectory<3> t;
  t.dt = 1e-3;
  t.n_steps = 500;
  for (long k = 0; k <= 500; ++k) t.spin_ratio.push_back(sim::spin_ratio(s, props));
  EXPECT_NEAR(losses::loss_rotator(t), omega * 0.5, 1e-12);
  sim::ParticleProps<3> rest_props;
  auto rest = planar_rigid_spin(0.0, rest_props);
  EXPECT_EQ(sim::spin_ratio(rest, rest_props), 0.0);
}

TEST(Rotator, RequiresThreeDimensions) {
  losses::TaskSpec task;
  task.kind = losses::TaskKind::kRotatorY;
  EXPECT_THROW((losses::StageLoss<2>(task, 1e-3, 1.0)), softbody::DomainError);
}

TEST(Constraints, MaterialValues) {
  EXPECT_EQ(losses::c_mat(VectorX::Constant(10, 0.5)), 0.25);
  EXPECT_EQ(losses::c_mat((VectorX(4) << 0.0, 1.0, 1.0, 0.0).finished()), 0.0);
  EXPECT_DOUBLE_EQ(losses::c_mat((VectorX(2) << 0.25, 0.75).finished()), 0.1875);
}

TEST(Constraints, ActuatorValues) {
  EXPECT_EQ(losses::c_act(MatrixX::Constant(5, 1600, 0.2)), 0.8);
  MatrixX one_hot = MatrixX::Zero(5, 3);
  one_hot(0, 0) = one_hot(3, 1) = one_hot(4, 2) = 1.0;
  EXPECT_EQ(losses::c_act(one_hot), 0.0);
  MatrixX half = MatrixX::Zero(5, 1);
  half(0, 0) = half(1, 0) = 0.5;
  EXPECT_EQ(losses::c_act(half), 0.5);
}

TEST(Constraints, ActuatorMatchesOneMinusSquaredNormOnSoftmaxColumns) {
  MatrixX xi(5, 50);
  for (long i = 0; i < xi.cols(); ++i) {
    VectorX z(5);
    for (long j = 0; j < 5; ++j) z[j] = std::sin(3.1 * i + 1.7 * j);
    xi.col(i) = softbody::design::softmax_project<double>(z, 4.0);
  }
  const double reference = (1.0 - xi.colwise().squaredNorm().array()).mean();
  EXPECT_NEAR(losses::c_act(xi), reference, 1e-15);
}

TEST(Constraints, PulseValues) {
  EXPECT_EQ(losses::c_pul(MatrixX::Zero(10, 4)), 1.0);
  EXPECT_EQ(losses::c_pul((MatrixX(2, 1) << 1.0, -1.0).finished()), 0.0);
  EXPECT_EQ(losses::c_pul(MatrixX::Constant(1, 1, 0.5)), 0.75);
}

TEST(Constraints, DefaultTolerances) {
  const auto tol = losses::TaskSpec::default_tolerances(4);
  EXPECT_DOUBLE_EQ(tol[0], 0.0125);
  EXPECT_DOUBLE_EQ(tol[1], 0.04);
  EXPECT_EQ(tol[2], 0.01);
  EXPECT_EQ(tol[3], 0.01);
}

TEST(Penalty, Branches) {
  EXPECT_EQ(losses::penalty(0.2, 0.25), 0.0);
  EXPECT_NEAR(losses::penalty(0.3, 0.25), 0.05, 1e-16);
  EXPECT_EQ(losses::penalty(0.25, 0.25), 0.0);
  EXPECT_LT(losses::penalty(0.25 + 1e-12, 0.25), 2e-12);
}

TEST(AugmentedLagrangian, Values) {
  const double L = -0.3;
  EXPECT_EQ(losses::augmented_lagrangian(L, {0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}), L);
  EXPECT_NEAR(losses::augmented_lagrangian(L, {0.1}, {0.0}, {2.0}), L + 0.01, 1e-15);
  EXPECT_NEAR(losses::augmented_lagrangian(L, {0.1}, {1.0}, {0.001}), L - 0.099995, 1e-15);
  EXPECT_THROW(losses::augmented_lagrangian(L, {0.1}, {0.0}, {0.0}), softbody::DomainError);
}

TEST(AugmentedLagrangian, PenaltyGradient) {
  const auto g = losses::augmented_lagrangian_penalty_grad({0.1, 0.0}, {1.0, -2.0}, {2.0, 5.0});
  EXPECT_NEAR(g[0], -1.0 + 0.2, 1e-15);
  EXPECT_EQ(g[1], 2.0);
}

TEST(TaskKind, NamesRoundTrip) {
  for (auto k : {losses::TaskKind::kWalkerX, losses::TaskKind::kClimberY,
                 losses::TaskKind::kBalancerTip, losses::TaskKind::kRotatorY}) {
    EXPECT_EQ(losses::task_kind_from_string(losses::to_string(k)), k);
  }
}

}  // namespace
