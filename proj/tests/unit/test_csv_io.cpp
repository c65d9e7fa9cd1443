#include "sdelab/csv_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace sdelab;

namespace {

EnsembleStats sample(std::size_t d) {
  ExperimentSpec s;
  s.id = "round_trip";
  Vec lam(d);
  for (std::size_t i = 0; i < d; ++i) lam[i] = 1.0 + 0.37 * static_cast<double>(i);
  s.landscape = makeQuadratic(lam);
  s.noise = makeGaussianNoise(Vec(d, 0.3));
  OptimizerConfig oc;
  oc.family = OptimizerFamily::Adam;
  oc.eta = 1e-2;
  s.optimizer = oc;
  s.runs = 17;
  s.steps = 25;
  s.x0 = Vec(d, 0.4);
  return runEnsemble(s, Engine::Discrete);
}

} // namespace

TEST(Csv, Header) {
  const auto cols = statsColumns(2);
  const std::vector<std::string> expected{"experiment_id", "engine", "step",   "time",   "loss_mean", "loss_std",
                                          "n_alive",       "mean_0", "mean_1", "cov_0_0", "cov_1_1"};
  EXPECT_EQ(cols, expected);
  EXPECT_EQ(statsColumns(17).size(), 7u);
}

TEST(Csv, RoundTripIsExact) {
  const EnsembleStats s = sample(3);
  std::stringstream ss;
  writeStatsCsv(ss, s);
  const EnsembleStats p = readStatsCsv(ss);
  EXPECT_EQ(p.experimentId, s.experimentId);
  EXPECT_EQ(p.engine, s.engine);
  EXPECT_EQ(p.dim, s.dim);
  EXPECT_EQ(p.nAlive, s.nAlive);
  EXPECT_EQ(p.stepIndex, s.stepIndex);
  EXPECT_EQ(p.time, s.time);
  EXPECT_EQ(p.lossMean, s.lossMean);
  EXPECT_EQ(p.lossStd, s.lossStd);
  EXPECT_EQ(p.stateMean, s.stateMean);
  EXPECT_EQ(p.stateCov, s.stateCov);
  std::stringstream again;
  writeStatsCsv(again, p);
  std::stringstream first;
  writeStatsCsv(first, s);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Csv, LargeDimensionIsLossOnly) {
  const EnsembleStats s = sample(20);
  std::stringstream ss;
  writeStatsCsv(ss, s);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "experiment_id,engine,step,time,loss_mean,loss_std,n_alive");
  ss.seekg(0);
  const EnsembleStats p = readStatsCsv(ss);
  EXPECT_EQ(p.lossMean, s.lossMean);
  EXPECT_EQ(p.dim, 0u);
}

TEST(Csv, OracleRowsAndSpecialValues) {
  const auto o = makeOracleStats("o", {0, 5}, {0.0, 0.5}, {std::numeric_limits<double>::infinity(), 1e-300});
  std::stringstream ss;
  writeStatsCsv(ss, o);
  EXPECT_NE(ss.str().find(",oracle,"), std::string::npos);
  const auto p = readStatsCsv(ss);
  EXPECT_TRUE(std::isinf(p.lossMean[0]));
  EXPECT_EQ(p.lossMean[1], 1e-300);
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream bad1("experiment_id,engine,step\n");
  EXPECT_THROW(readStatsCsv(bad1), std::runtime_error);
  std::stringstream bad2("experiment_id,engine,step,time,loss_mean,loss_std,n_alive\nx,sde,0,0,1\n");
  EXPECT_THROW(readStatsCsv(bad2), std::runtime_error);
  std::stringstream bad3("experiment_id,engine,step,time,loss_mean,loss_std,n_alive\nx,gpu,0,0,1,0,1\n");
  EXPECT_THROW(readStatsCsv(bad3), std::invalid_argument);
  std::stringstream empty("");
  EXPECT_THROW(readStatsCsv(empty), std::runtime_error);
}

TEST(Csv, WeakErrorColumns) {
  WeakErrorReport r;
  r.observable = "loss";
  r.stepIndex = {0, 1};
  r.perStepGap = {0.0, 0.25};
  r.perStepStdErr = {0.0, 0.5};
  std::stringstream ss;
  writeWeakErrorCsv(ss, r);
  EXPECT_EQ(ss.str(), "observable,step,gap,mc_stderr\nloss,0,0,0\nloss,1,0.25,0.5\n");
}

TEST(Csv, ShortestRoundTripFormatting) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 0.0})
    EXPECT_EQ(parseDouble(formatDouble(v)), v);
  EXPECT_EQ(formatDouble(0.1), "0.1");
  EXPECT_THROW(parseDouble("1.0x"), std::invalid_argument);
}
