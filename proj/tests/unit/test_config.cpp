#include "sdelab/config.hpp"
#include "sdelab/experiment.hpp"

#include <gtest/gtest.h>

using namespace sdelab;

TEST(Config, ParsesTablesAndValues) {
  const Config c = Config::parse(R"(
# top comment
title = "x"   # trailing comment
[a]
n = 1.5e-3
i = 1_000
flag = true
list = [1, 2, 3e-1]
names = ["p", "q"]
sub.key = -2
[b.c]
s = "has # hash"
)");
  EXPECT_EQ(c.string("title"), "x");
  EXPECT_DOUBLE_EQ(c.number("a.n"), 1.5e-3);
  EXPECT_EQ(c.number("a.i"), 1000.0);
  EXPECT_TRUE(c.boolean("a.flag", false));
  EXPECT_EQ(c.numbers("a.list"), (std::vector<double>{1, 2, 0.3}));
  EXPECT_EQ(c.strings("a.names", {}), (std::vector<std::string>{"p", "q"}));
  EXPECT_EQ(c.number("a.sub.key"), -2.0);
  EXPECT_EQ(c.string("b.c.s"), "has # hash");
  EXPECT_EQ(c.numbers("a.n"), (std::vector<double>{1.5e-3}));
  EXPECT_EQ(c.number("missing", 4.0), 4.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    Config::parse("a = 1\nb = \n", "f.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.toml:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("[a\n"), ConfigError);
  EXPECT_THROW(Config::parse("a = \"open\n"), ConfigError);
  EXPECT_THROW(Config::parse("a = 1").string("a"), ConfigError);
  EXPECT_THROW(Config::parse("a = 1").number("b"), ConfigError);
}

TEST(Spec, FromConfig) {
  const Config c = Config::parse(R"(
[experiment]
id = "t"
runs = 10
steps = 20
seed = 3
x0 = [1, 2]
[landscape]
lambdas = [1, 2]
[noise]
sigma = 0.1
[optimizer]
family = "adamw"
eta = 1e-3
theta = 1
[scaling]
rule = "ours"
delta = 4
[sde]
family = "adam"
)");
  const ExperimentSpec s = specFromConfig(c);
  EXPECT_EQ(s.id, "t");
  EXPECT_EQ(s.runs, 10u);
  ASSERT_TRUE(s.optimizer);
  EXPECT_DOUBLE_EQ(s.optimizer->eta, 2e-3);
  EXPECT_DOUBLE_EQ(s.optimizer->theta, 2.0);
  EXPECT_DOUBLE_EQ(std::get<GaussianDiagNoise>(s.noise).batch, 4.0);
  EXPECT_EQ(s.sde->hyper.eta, s.optimizer->eta);
  EXPECT_EQ(sdeStepSize(s), 2e-3);
  EXPECT_EQ(sdeSteps(s), 20u);
}

TEST(Spec, RejectsFamilyMismatchAndMissingEngines) {
  EXPECT_THROW(specFromConfig(Config::parse(R"(
[landscape]
lambdas = [1]
[noise]
sigma = 1
[optimizer]
family = "sgd"
eta = 0.1
[sde]
family = "signsgd"
)")),
               std::invalid_argument);
  EXPECT_THROW(specFromConfig(Config::parse("[landscape]\nlambdas = [1]\n[noise]\nsigma = 1\n")),
               std::invalid_argument);
  EXPECT_THROW(specFromConfig(Config::parse(R"(
[landscape]
lambdas = [1, 2]
[noise]
sigma = [1, 2, 3]
[optimizer]
family = "sgd"
eta = 0.1
)")),
               ConfigError);
}

TEST(Spec, RegressionNoiseUsesPhiSpace) {
  const ExperimentSpec s = specFromConfig(Config::parse(R"(
[experiment]
x0 = 0.5
[landscape]
kind = "powerlaw"
v = 6
d = 3
alpha = 0.5
[noise]
kind = "regression"
[sde]
family = "signsgd"
variant = "full"
eta = 1e-3
)"));
  EXPECT_EQ(dimension(s.landscape), 6u);
  EXPECT_EQ(s.x0.size(), 6u);
  EXPECT_TRUE(std::holds_alternative<QuadraticDiag>(s.landscape));
}
