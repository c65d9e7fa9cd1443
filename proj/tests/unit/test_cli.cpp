#include "sdelab/cli.hpp"
#include "sdelab/csv_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sdelab;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sdelab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("ADAPTIVE_SDE_LAB_OUT");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string writeConfig(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "adaptive-sde-lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    out_.str("");
    err_.str("");
    return cliMain(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kQuad = R"(
[experiment]
id = "quad"
runs = 40
steps = 200
seed = 1
x0 = [0.01, 0.01]
[landscape]
lambdas = [1, 2]
[noise]
sigma = 0.1
[optimizer]
family = "signsgd"
eta = 1e-3
[sde]
family = "signsgd"
)";

const char* kAdamW = R"(
[experiment]
id = "adamw"
runs = 20
steps = 300
x0 = [1, 1]
[landscape]
lambdas = [1, 3]
[noise]
sigma = 1
[optimizer]
family = "adamw"
eta = 1e-3
theta = 1
)";

} // namespace

TEST_F(CliTest, OraclePrintsClosedForms) {
  const auto cfg = writeConfig("quad.toml", kQuad);
  ASSERT_EQ(run({"--config", cfg, "--out", (dir_ / "o").string(), "oracle"}), 0) << err_.str();
  const std::string o = out_.str();
  EXPECT_NE(o.find("stationary_cov 6.24"), std::string::npos) << o;
  EXPECT_NE(o.find("asymptotic_loss_bound"), std::string::npos) << o;
  EXPECT_NE(o.find("phase_constants"), std::string::npos);
}

TEST_F(CliTest, OraclePrintsAdamWBound) {
  const auto cfg = writeConfig("adamw.toml", kAdamW);
  ASSERT_EQ(run({"--config", cfg, "--out", (dir_ / "o").string(), "oracle"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("asymptotic_loss_bound 0.0006"), std::string::npos) << out_.str();
}

TEST_F(CliTest, CompareEmitsTwoStatsAndOneWeakErrorCsv) {
  const auto cfg = writeConfig("quad.toml", kQuad);
  const fs::path out = dir_ / "o";
  ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "compare"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(out / "quad_discrete.csv"));
  EXPECT_TRUE(fs::exists(out / "quad_sde.csv"));
  EXPECT_TRUE(fs::exists(out / "quad_weak_error.csv"));
  const auto st = readStatsCsv((out / "quad_sde.csv").string());
  EXPECT_EQ(st.records(), 201u);
  EXPECT_EQ(st.nAlive, 40u);
}

TEST_F(CliTest, GlobalOverridesAndDeterminism) {
  const auto cfg = writeConfig("quad.toml", kQuad);
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run({"--config", cfg, "--out", a.string(), "--runs", "7", "--seed", "9", "simulate"}), 0);
  ASSERT_EQ(run({"--config", cfg, "--out", b.string(), "--runs", "7", "--seed", "9", "--threads", "2", "simulate"}), 0);
  std::ifstream fa(a / "quad_discrete.csv"), fb(b / "quad_discrete.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(readStatsCsv((a / "quad_discrete.csv").string()).nAlive, 7u);
}

TEST_F(CliTest, EnvironmentOverridesOut) {
  const auto cfg = writeConfig("quad.toml", kQuad);
  const fs::path env = dir_ / "env";
  setenv("ADAPTIVE_SDE_LAB_OUT", env.string().c_str(), 1);
  ASSERT_EQ(run({"--config", cfg, "--out", (dir_ / "flag").string(), "simulate", "--engine", "sde"}), 0);
  unsetenv("ADAPTIVE_SDE_LAB_OUT");
  EXPECT_TRUE(fs::exists(env / "quad_sde.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "flag" / "quad_sde.csv"));
}

TEST_F(CliTest, ScalingEmitsBaselineRescaledAndNotRescaled) {
  const auto cfg = writeConfig("adamw.toml", kAdamW);
  const fs::path out = dir_ / "o";
  ASSERT_EQ(run({"--config", cfg, "--out", out.string(), "scaling", "--rule", "ours", "--delta", "4"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(out / "adamw_baseline_discrete.csv"));
  EXPECT_TRUE(fs::exists(out / "adamw_rescaled_discrete.csv"));
  EXPECT_TRUE(fs::exists(out / "adamw_theta_not_rescaled_discrete.csv"));
}

TEST_F(CliTest, OtherSubcommandsRun) {
  const auto cfg = writeConfig("quad.toml", kQuad);
  const fs::path out = dir_ / "o";
  EXPECT_EQ(run({"--config", cfg, "--out", out.string(), "phases"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(out / "quad_phases.csv"));
  EXPECT_EQ(run({"--config", cfg, "--out", out.string(), "stationary"}), 0) << err_.str();
  EXPECT_EQ(run({"--config", cfg, "--out", out.string(), "schedulers", "--varthetas", "0.5", "1.5"}), 0) << err_.str();
  EXPECT_TRUE(fs::exists(out / "quad_vartheta0.5_discrete.csv"));
  EXPECT_EQ(run({"--config", cfg, "--out", out.string(), "--runs", "5", "sweep-sigma", "--sigmas", "0.1", "1"}), 0)
      << err_.str();
  EXPECT_NE(out_.str().find("loglog_slope"), std::string::npos);
}

TEST_F(CliTest, ErrorsAreSingleLineAndNonZero) {
  EXPECT_NE(run({"frobnicate"}), 0);
  EXPECT_NE(run({"--config", (dir_ / "missing.toml").string(), "oracle"}), 0);
  const auto bad = writeConfig("bad.toml", "[landscape\n");
  EXPECT_NE(run({"--config", bad, "oracle"}), 0);
  const std::string e = err_.str();
  EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), 1) << e;
  EXPECT_EQ(e.rfind("error: ", 0), 0u);
  const auto mismatch = writeConfig("mm.toml", std::string(kQuad).replace(std::string(kQuad).rfind("signsgd"), 7, "sgd"));
  EXPECT_NE(run({"--config", mismatch, "--out", (dir_ / "o").string(), "compare"}), 0);
  EXPECT_NE(err_.str().find("does not model"), std::string::npos) << err_.str();
  EXPECT_NE(run({"--config", mismatch, "--format", "json", "oracle"}), 0);
}

TEST_F(CliTest, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(SDELAB_CONFIG_DIR)) {
    EXPECT_EQ(run({"--config", entry.path().string(), "--out", (dir_ / "o").string(), "oracle"}), 0)
        << entry.path() << ": " << err_.str();
  }
}
