#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SOFTBODY_CLI) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  long n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          (std::string("softbody_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("teleport"), 1);
  EXPECT_EQ(run("simulate --config tiny"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ConfigErrors) {
  EXPECT_EQ(run("simulate --config no_such_file.yaml --out " + path("a")), 2);
  std::ofstream(path("bad.yaml")) << "sim:\n  dx: [0.01\n";
  EXPECT_EQ(run("simulate --config " + path("bad.yaml") + " --out " + path("a")), 2);
}

TEST_F(Cli, SimulateWritesOutputs) {
  ASSERT_EQ(run("simulate --config tiny --out " + path("sim")), 0);
  for (const char* f : {"trajectory.json", "trajectory.bin", "com.csv", "contact_floor.csv",
                        "summary.json", "layout.csv", "signals.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "sim" / "summary.json"));
  EXPECT_EQ(summary["command"], "simulate");
  EXPECT_EQ(count_lines(dir / "sim" / "com.csv"), 1 + 51);
}

TEST_F(Cli, OptimizeLogsOneRowPerIteration) {
  ASSERT_EQ(run("optimize --config tiny --iters 5 --out " + path("opt")), 0);
  EXPECT_EQ(count_lines(dir / "opt" / "convergence.csv"), 1 + 5);
  EXPECT_TRUE(fs::exists(dir / "opt" / "checkpoint.sb4d"));
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  ASSERT_EQ(run("--deterministic optimize --config tiny --iters 12 --out " + path("straight")), 0);
  ASSERT_EQ(run("--deterministic optimize --config tiny --iters 7 --out " + path("split")), 0);
  ASSERT_EQ(run("--deterministic optimize --config tiny --iters 5 --out " + path("split") +
                " --resume " + path("split/checkpoint.sb4d")),
            0);
  EXPECT_EQ(slurp(dir / "split" / "convergence.csv"), slurp(dir / "straight" / "convergence.csv"));
  EXPECT_EQ(slurp(dir / "split" / "layout.csv"), slurp(dir / "straight" / "layout.csv"));
}

TEST_F(Cli, ResumeRejectsForeignCheckpoint) {
  std::ofstream(path("junk.sb4d")) << "junk";
  EXPECT_EQ(run("optimize --config tiny --iters 1 --out " + path("r") + " --resume " +
                path("junk.sb4d")),
            2);
}

TEST_F(Cli, GradcheckPassesOnTinyPreset) {
  EXPECT_EQ(run("gradcheck --config tiny --samples 12 --report " + path("report.csv")), 0);
  EXPECT_EQ(count_lines(path("report.csv")), 1 + 12);
}

TEST_F(Cli, PostprocessBinarizedDesignSatisfiesConstraints) {
  ASSERT_EQ(run("optimize --config tiny --iters 3 --out " + path("p")), 0);
  ASSERT_EQ(run("postprocess --run " + path("p")), 0);
  const auto s = nlohmann::json::parse(slurp(dir / "p" / "postprocess" / "summary.json"));
  for (const auto& c : s["binarized_constraints"]) EXPECT_EQ(c.get<double>(), 0.0);
  EXPECT_GT(s["solid_particles"].get<long>(), 0);
}

TEST_F(Cli, ExportRegeneratesArtifacts) {
  ASSERT_EQ(run("optimize --config tiny --iters 2 --out " + path("e")), 0);
  const auto before = slurp(dir / "e" / "layout.csv");
  fs::remove(dir / "e" / "layout.csv");
  EXPECT_EQ(run("export --run " + path("e") + " --what layout"), 0);
  EXPECT_EQ(slurp(dir / "e" / "layout.csv"), before);
  EXPECT_EQ(run("export --run " + path("e") + " --what nonsense"), 1);
}

}  // namespace
