#include <cmath>

#include <gtest/gtest.h>

#include "softbody/sim/params.hpp"

namespace sim = softbody::sim;

namespace {

// dx over the P-wave speed, from the P-wave modulus E (1 - nu) / ((1 + nu)(1 - 2 nu)).
double p_wave_dt(double dx, double rho, double E, double nu) {
  const double M = E * (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return dx / std::sqrt(M / rho);
}

sim::SimParams params_with_dx(double dx) {
  sim::SimParams p;
  p.dx = dx;
  return p;
}

TEST(Lame, ReferenceMaterial) {
  const auto [lambda, mu] = sim::lame_from_elastic(1e5, 0.4);
  EXPECT_NEAR(lambda, 142857.142857, 1e-5);
  EXPECT_NEAR(mu, 35714.285714, 1e-5);
}

TEST(Lame, RoundNumbers) {
  const auto [lambda, mu] = sim::lame_from_elastic(2.8e5, 0.4);
  EXPECT_NEAR(lambda, 4e5, 1e-8);
  EXPECT_NEAR(mu, 1e5, 1e-9);
}

TEST(Lame, ZeroPoisson) {
  const auto [lambda, mu] = sim::lame_from_elastic(3.0, 0.0);
  EXPECT_EQ(lambda, 0.0);
  EXPECT_DOUBLE_EQ(mu, 1.5);
}

TEST(Lame, RejectsIncompressibleAndInvalid) {
  EXPECT_THROW(sim::lame_from_elastic(1e5, 0.5), softbody::DomainError);
  EXPECT_THROW(sim::lame_from_elastic(1e5, 0.7), softbody::DomainError);
  EXPECT_THROW(sim::lame_from_elastic(1e5, -1.0), softbody::DomainError);
  EXPECT_THROW(sim::lame_from_elastic(0.0, 0.3), softbody::DomainError);
}

TEST(Cfl, ReferenceStep) {
  const auto mat = sim::MaterialConstants::from_elastic(1000.0, 1e5, 0.4, 1e-5);
  const double dt = sim::cfl_max_dt(params_with_dx(0.01), mat);
  EXPECT_NEAR(dt, 6.8e-4, 0.02 * 6.8e-4);
  EXPECT_NEAR(dt, p_wave_dt(0.01, 1000.0, 1e5, 0.4), 1e-15);
}

TEST(Cfl, ScalesLinearlyWithDx) {
  const auto mat = sim::MaterialConstants::from_elastic(1000.0, 1e5, 0.4, 1e-5);
  const double a = sim::cfl_max_dt(params_with_dx(0.01), mat);
  const double b = sim::cfl_max_dt(params_with_dx(0.03), mat);
  EXPECT_NEAR(b / a, 3.0, 1e-12);
}

TEST(Cfl, InverseSqrtOfModulus) {
  const auto soft = sim::MaterialConstants::from_elastic(1000.0, 1e5, 0.3, 1e-5);
  const auto stiff = sim::MaterialConstants::from_elastic(1000.0, 4e5, 0.3, 1e-5);
  const double a = sim::cfl_max_dt(params_with_dx(0.01), soft);
  const double b = sim::cfl_max_dt(params_with_dx(0.01), stiff);
  EXPECT_NEAR(a / b, 2.0, 1e-12);
  EXPECT_NEAR(a, p_wave_dt(0.01, 1000.0, 1e5, 0.3), 1e-15);
}

TEST(SimParams, FinalizeDerivesCounts) {
  sim::SimParams p;
  p.dx = 0.01;
  p.dt = 1e-4;
  p.domain_length = 1.0;
  p.total_time = 0.5;
  p.finalize(100.0);
  EXPECT_EQ(p.nodes_per_axis, 100);
  EXPECT_EQ(p.n_steps, 5000);
  EXPECT_DOUBLE_EQ(p.blowup_velocity, 200.0);
}

TEST(Boundary, SineMotionVelocity) {
  sim::BoundaryMotion m;
  m.kind = sim::BoundaryMotion::Kind::kSine;
  m.axis = 0;
  m.amplitude = 0.03;
  m.omega = 40.0;
  EXPECT_DOUBLE_EQ(m.at(0.0).x(), 1.2);
  EXPECT_NEAR(m.at(M_PI / 80.0).x(), 0.0, 1e-15);
  EXPECT_EQ(m.at(0.3).y(), 0.0);
}

TEST(Boundary, NodeMembership) {
  sim::BoundarySpec floor;
  floor.plane = 0.03;
  EXPECT_TRUE(floor.contains_node(3, 0.01));
  EXPECT_FALSE(floor.contains_node(4, 0.01));
  sim::BoundarySpec wall;
  wall.axis = 0;
  wall.side = sim::BoundarySide::kUpper;
  wall.plane = 0.6;
  EXPECT_TRUE(wall.contains_node(60, 0.01));
  EXPECT_FALSE(wall.contains_node(59, 0.01));
}

TEST(Boundary, ValidateRejectsBadInput) {
  sim::BoundarySpec b;
  b.normal = Eigen::Vector3d(0.0, 2.0, 0.0);
  EXPECT_THROW(b.validate(2), softbody::DomainError);
  b.normal = Eigen::Vector3d(0.0, 1.0, 0.0);
  b.friction = -0.1;
  EXPECT_THROW(b.validate(2), softbody::DomainError);
  b.friction = 0.0;
  b.axis = 2;
  EXPECT_THROW(b.validate(2), softbody::DomainError);
  EXPECT_NO_THROW(b.validate(3));
}

TEST(Boundary, ModeNamesRoundTrip) {
  for (auto m : {sim::BoundaryMode::kCoulomb, sim::BoundaryMode::kNoSlip,
                 sim::BoundaryMode::kStickyAlways}) {
    EXPECT_EQ(sim::boundary_mode_from_string(sim::to_string(m)), m);
  }
  EXPECT_THROW(sim::boundary_mode_from_string("slippery"), softbody::DomainError);
}

}  // namespace
