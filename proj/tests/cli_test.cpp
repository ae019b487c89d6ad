#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BUBBLEOPT_CLI;
const std::string kConfigDir = BUBBLEOPT_CONFIG_DIR;

// Small version of the reciprocal Bessel setup so each run takes well under a second.
const char* kSmall = R"(name: small
model: {kind: reciprocal_bessel, s0: 1.0, horizon: 1.0}
payoff: {kind: call, strike: 1.0}
engine:
  montecarlo: {paths: 3000, steps: 100, seed: 7, levels: [2, 4, 8], dump_paths: 3}
  pde: {core_cells: 80, time_steps: 80, focus_upper: 8, report_x: [1.0]}
)";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("bubbleopt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  // Runs the CLI with its output captured to a file; returns the exit code.
  int run(const std::string& args) const {
    const std::string cmd = kCli + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string output() const { return slurp(dir_ / "stdout.txt"); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingOrBadConfigIsAValidationError) {
  EXPECT_EQ(run("delta --config " + (dir_ / "nope.cfg").string()), 2);
  const auto bad = write_config("bad.cfg", std::string(kSmall) + "extra: 1\n");
  EXPECT_EQ(run("delta --config " + bad), 2);
  EXPECT_NE(output().find("extra: unknown key"), std::string::npos) << output();
  EXPECT_EQ(run("frobnicate --config " + bad), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, SeedIsRequired) {
  std::string text = kSmall;
  text.replace(text.find("seed: 7, "), 9, "");
  const auto cfg = write_config("noseed.cfg", text);
  EXPECT_EQ(run("delta --config " + cfg + " --out-dir " + (dir_ / "a").string()), 2);
  EXPECT_NE(output().find("engine.montecarlo.seed"), std::string::npos);
  EXPECT_EQ(run("delta --config " + cfg + " --seed 9 --out-dir " + (dir_ / "a").string()), 0);
  EXPECT_EQ(run("delta --config " + cfg + " --seed 9 --threads 0 --out-dir " + (dir_ / "a").string()), 2);
}

TEST_F(Cli, OutputsDoNotDependOnThreadCount) {
  const auto cfg = write_config("small.cfg", kSmall);
  for (const std::string threads : {"1", "4"}) {
    const auto out = (dir_ / ("t" + threads)).string();
    ASSERT_EQ(run("value --config " + cfg + " --threads " + threads + " --out-dir " + out), 0) << output();
    ASSERT_EQ(run("delta --config " + cfg + " --threads " + threads + " --out-dir " + out), 0) << output();
  }
  for (const char* file : {"value.csv", "delta.csv", "delta_tau_star.csv", "delta_horizon.csv"}) {
    const auto a = slurp(dir_ / "t1" / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, slurp(dir_ / "t4" / file)) << file;
  }
  // A different seed changes the numbers.
  ASSERT_EQ(run("delta --config " + cfg + " --seed 8 --out-dir " + (dir_ / "s8").string()), 0);
  EXPECT_NE(slurp(dir_ / "t1" / "delta.csv"), slurp(dir_ / "s8" / "delta.csv"));
}

TEST_F(Cli, DeltaCsvLayout) {
  const auto cfg = write_config("small.cfg", kSmall);
  ASSERT_EQ(run("delta --config " + cfg + " --out-dir " + dir_.string()), 0) << output();
  std::istringstream csv(slurp(dir_ / "delta.csv"));
  std::string line, last;
  int rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line.substr(0, 6), "level,");
  while (std::getline(csv, line)) {
    if (line.rfind("delta_hat,", 0) == 0 || line.rfind("verdict,", 0) == 0) {
      last = line;
      continue;
    }
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(last.rfind("verdict,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "report.txt"));
}

TEST_F(Cli, TauStarJson) {
  ASSERT_EQ(run("tau-star --config " + kConfigDir + "/jump_deflator.cfg --out-dir " + dir_.string()), 0) << output();
  const auto j = nlohmann::json::parse(slurp(dir_ / "tau_star.json"));
  EXPECT_EQ(j["time"].get<double>(), 0.5);
  EXPECT_EQ(j["trigger"].get<std::string>(), "AffineInterval");
  EXPECT_EQ(j["interval"]["lower"].get<double>(), 2.0);
  EXPECT_TRUE(j["interval"]["upper"].is_null());
  EXPECT_FALSE(j["certificate"].empty());
}

TEST_F(Cli, PricePdeAndPaths) {
  const auto cfg = write_config("small.cfg", kSmall);
  ASSERT_EQ(run("price-pde --config " + cfg + " --out-dir " + dir_.string()), 0) << output();
  EXPECT_EQ(slurp(dir_ / "pde.csv").substr(0, 17), "t,x,ebar,a,e,gap\n");
  EXPECT_TRUE(fs::exists(dir_ / "pde_points.csv"));

  ASSERT_EQ(run("dump-paths --config " + cfg + " --out-dir " + dir_.string()), 0) << output();
  std::istringstream paths(slurp(dir_ / "paths.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(paths, line)) ++rows;
  EXPECT_EQ(rows, 3 * 101);
}

TEST_F(Cli, NumericalFailureExitCode) {
  std::string text = kSmall;
  text.replace(text.find("focus_upper: 8"), 14, "focus_upper: 8, max_doublings: 0");
  const auto cfg = write_config("nodoubling.cfg", text);
  EXPECT_EQ(run("price-pde --config " + cfg + " --out-dir " + dir_.string()), 4);
  EXPECT_NE(output().find("did not converge"), std::string::npos) << output();
}
