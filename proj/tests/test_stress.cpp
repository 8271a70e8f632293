#include <random>

#include <gtest/gtest.h>

#include "softbody/sim/stress.hpp"

namespace sim = softbody::sim;
using softbody::Mat;

namespace {

TEST(NeoHookean, RestStateIsStressFree) {
  const Mat<2> K = sim::neo_hookean_kirchhoff<2, double>(Mat<2>::Identity(), 7.0, 3.0);
  EXPECT_EQ(K, Mat<2>::Zero());
  const Mat<3> K3 = sim::neo_hookean_kirchhoff<3, double>(Mat<3>::Identity(), 7.0, 3.0);
  EXPECT_EQ(K3, Mat<3>::Zero());
}

TEST(NeoHookean, UniformStretchShearOnly) {
  // mu (1.21 - 1) I with lambda = 0
  const Mat<3> K = sim::neo_hookean_kirchhoff<3, double>(1.1 * Mat<3>::Identity(), 0.0, 1.0);
  EXPECT_TRUE(K.isApprox(0.21 * Mat<3>::Identity(), 1e-14));
}

TEST(NeoHookean, VolumetricTerm) {
  const Mat<2> F = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  const Mat<2> K = sim::neo_hookean_kirchhoff<2, double>(F, 1.0, 0.0);
  EXPECT_NEAR(K(0, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(K(1, 1), std::log(2.0), 1e-15);
  EXPECT_EQ(K(0, 1), 0.0);
}

TEST(NeoHookean, SymmetricForRandomF) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 50; ++i) {
    Mat<3> F = Mat<3>::Identity();
    for (int k = 0; k < 9; ++k) F(k) += u(rng);
    const Mat<3> K = sim::neo_hookean_kirchhoff<3, double>(F, 2.0, 1.5);
    EXPECT_LT((K - K.transpose()).norm(), 1e-13);
  }
}

TEST(NeoHookean, InvertedThrows) {
  const Mat<2> F = Eigen::Vector2d(-1.0, 1.0).asDiagonal();
  EXPECT_THROW((sim::neo_hookean_kirchhoff<2, double>(F, 1.0, 1.0)), softbody::DomainError);
  EXPECT_THROW((sim::neo_hookean_kirchhoff<2, double>(Mat<2>::Zero(), 1.0, 1.0)),
               softbody::DomainError);
}

TEST(Actuation, DiagonalStretch) {
  const Mat<2> F = Eigen::Vector2d(2.0, 1.0).asDiagonal();
  const Mat<2> K = sim::actuation_kirchhoff<2, double>(F, 1.0);
  const Mat<2> expected = Eigen::Vector2d(-4.0, -1.0).asDiagonal();
  EXPECT_EQ(K, expected);
}

TEST(Actuation, LinearInSignal) {
  Mat<3> F;
  F << 1.1, 0.2, 0.0, -0.1, 0.9, 0.05, 0.0, 0.1, 1.2;
  const Mat<3> a = sim::actuation_kirchhoff<3, double>(F, 1.0);
  const Mat<3> b = sim::actuation_kirchhoff<3, double>(F, -2.5);
  EXPECT_TRUE(b.isApprox(-2.5 * a, 1e-15));
  EXPECT_LT((a - a.transpose()).norm(), 1e-15);
  EXPECT_EQ((sim::actuation_kirchhoff<3, double>(F, 0.0)), Mat<3>::Zero());
}

}  // namespace
