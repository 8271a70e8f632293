#include <cmath>
#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "softbody/scenario/config.hpp"
#include "softbody/scenario/scenario.hpp"

namespace sc = softbody::scenario;
namespace sim = softbody::sim;

namespace {

TEST(Presets, AllShippedPresetsRoundTrip) {
  const auto names = sc::preset_names();
  EXPECT_GE(names.size(), 7u);
  for (const auto& name : names) {
    const auto c = sc::load_config(name);
    const auto again = sc::parse_config(sc::to_yaml(c));
    EXPECT_TRUE(again == c) << name;
  }
}

TEST(Presets, ParticleCounts) {
  const std::map<std::string, long> expected = {
      {"walker2d", 1600}, {"climber2d", 1600}, {"balancer2d", 1600}, {"walker3d", 8000},
      {"rotator3d", 8000}, {"tiny", 64},      {"mini_walker", 400}};
  for (const auto& [name, n] : expected) {
    EXPECT_EQ(sc::seed_particles(sc::load_config(name)).rows(), n) << name;
  }
}

TEST(Presets, Walker2d) {
  const auto c = sc::load_config("walker2d");
  EXPECT_EQ(c.sim.dim, 2);
  EXPECT_EQ(c.sim.total_time, 0.5);
  EXPECT_EQ(c.sim.n_steps, 5000);
  EXPECT_EQ(c.pulse.A_act, 1e4);
  EXPECT_EQ(c.n_act, 4);
  EXPECT_EQ(c.task.kind, softbody::losses::TaskKind::kWalkerX);
  ASSERT_EQ(c.boundaries.size(), 1u);
  EXPECT_EQ(c.boundaries[0].mode, sim::BoundaryMode::kNoSlip);
}

TEST(Presets, BalancerFloorOscillates) {
  const auto c = sc::load_config("balancer2d");
  ASSERT_EQ(c.boundaries.size(), 1u);
  const auto& b = c.boundaries[0];
  EXPECT_EQ(b.mode, sim::BoundaryMode::kStickyAlways);
  EXPECT_EQ(b.motion.kind, sim::BoundaryMotion::Kind::kSine);
  const double t = 0.01;
  EXPECT_NEAR(b.motion.at(t).x(), 0.03 * 40.0 * std::cos(40.0 * t), 1e-14);
  EXPECT_EQ(b.motion.at(t).y(), 0.0);
}

TEST(Presets, ThreeDimensionalScenarios) {
  EXPECT_EQ(sc::load_config("walker3d").sim.dim, 3);
  const auto r = sc::load_config("rotator3d");
  EXPECT_EQ(r.sim.dim, 3);
  EXPECT_EQ(r.task.kind, softbody::losses::TaskKind::kRotatorY);
}

std::string tiny_with(const std::string& from, const std::string& to) {
  auto text = sc::to_yaml(sc::load_config("tiny"));
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

TEST(Validation, DesignDomainTouchingGridBorderIsRejected) {
  auto c = sc::load_config("tiny");
  c.design_domain.origin = {0.0, 0.03, 0.0};
  EXPECT_THROW(sc::finalize_and_validate(c), softbody::ConfigError);
  c = sc::load_config("tiny");
  c.design_domain.size = {0.4, 0.04, 0.0};
  EXPECT_THROW(sc::finalize_and_validate(c), softbody::ConfigError);
}

TEST(Validation, RejectsBadValues) {
  auto c = sc::load_config("tiny");
  c.sim.dt = 1.0;
  EXPECT_THROW(sc::finalize_and_validate(c), softbody::ConfigError);
  c = sc::load_config("tiny");
  c.n_act = 0;
  EXPECT_THROW(sc::finalize_and_validate(c), softbody::ConfigError);
  c = sc::load_config("tiny");
  c.mat.nu0 = 0.5;
  EXPECT_THROW(sc::finalize_and_validate(c), softbody::ConfigError);
}

TEST(Parsing, SyntaxErrorsCarryLineNumbers) {
  try {
    sc::parse_config("name: x\nsim:\n  dx: [0.01\n  dt: 1e-4\n");
    FAIL() << "expected ConfigError";
  } catch (const softbody::ConfigError& e) {
    EXPECT_GT(e.line(), 0);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(Parsing, SchemaErrorsCarryLineNumbers) {
  try {
    sc::parse_config(tiny_with("dt: ", "dt: fast\n  bogus: "));
    FAIL() << "expected ConfigError";
  } catch (const softbody::ConfigError& e) {
    EXPECT_GT(e.line(), 0);
  }
}

TEST(Parsing, UnknownEnumsAreRejected) {
  EXPECT_THROW(sc::parse_config(tiny_with("mode: no_slip", "mode: glue")), softbody::ConfigError);
  EXPECT_THROW(sc::parse_config(tiny_with("kind: walker_x", "kind: swimmer")),
               softbody::ConfigError);
}

TEST(Files, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "softbody_config_test.yaml";
  const auto c = sc::load_config("balancer2d");
  sc::save_config(c, path.string());
  EXPECT_TRUE(sc::load_config(path.string()) == c);
  std::filesystem::remove(path);
  EXPECT_THROW(sc::load_config("no_such_preset_or_file"), softbody::ConfigError);
}

TEST(Scenario, SeedLatticeIsCellCentered) {
  const auto c = sc::load_config("tiny");
  const auto x = sc::seed_particles(c);
  EXPECT_NEAR(x(0, 0), 0.14 + 0.0025, 1e-15);
  EXPECT_NEAR(x(0, 1), 0.03 + 0.0025, 1e-15);
  EXPECT_DOUBLE_EQ(sc::particle_volume(c), 0.005 * 0.005);
}

}  // namespace
