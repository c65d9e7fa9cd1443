#include "sdelab/csv_io.hpp"
#include "sdelab/ensemble.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace sdelab;

namespace {

ExperimentSpec quadSpec(OptimizerFamily fam, double eta, double sigma, std::size_t runs, std::size_t steps) {
  ExperimentSpec s;
  s.id = "ens";
  s.landscape = makeQuadratic({1, 2});
  s.noise = makeGaussianNoise({sigma, sigma});
  OptimizerConfig oc;
  oc.family = fam;
  oc.eta = eta;
  s.optimizer = oc;
  s.runs = runs;
  s.steps = steps;
  s.seed = 77;
  s.x0 = {0.5, -0.5};
  return s;
}

std::string csvOf(const EnsembleStats& s) {
  std::ostringstream os;
  writeStatsCsv(os, s);
  return os.str();
}

} // namespace

TEST(Ensemble, DeterministicGeometricDecay) {
  ExperimentSpec s;
  s.landscape = makeQuadratic({1});
  s.noise = GaussianDiagNoise{{0.0}, 1.0}; // sigma = 0 bypasses the validating factory on purpose
  OptimizerConfig oc;
  oc.family = OptimizerFamily::Sgd;
  oc.eta = 0.1;
  s.optimizer = oc;
  s.runs = 1;
  s.steps = 10;
  s.x0 = {1.5};
  const auto st = runEnsemble(s, Engine::Discrete);
  ASSERT_EQ(st.records(), 11u);
  for (std::size_t k = 0; k <= 10; ++k) {
    EXPECT_NEAR(st.lossMean[k], 0.5 * std::pow(0.9, 2.0 * k) * 1.5 * 1.5, 1e-15);
    EXPECT_EQ(st.lossStd[k], 0.0);
    EXPECT_NEAR(st.time[k], 0.1 * k, 1e-15);
  }
}

TEST(Ensemble, BitIdenticalAcrossInvocationsAndThreadCounts) {
  auto s = quadSpec(OptimizerFamily::SignSgd, 1e-2, 0.1, 203, 150);
  SdeSpec sde;
  sde.family = OptimizerFamily::SignSgd;
  sde.hyper = *s.optimizer;
  s.sde = sde;
  for (Engine e : {Engine::Discrete, Engine::Sde}) {
    const std::string a = csvOf(runEnsemble(s, e, {false, 1}));
    const std::string b = csvOf(runEnsemble(s, e, {false, 1}));
    const std::string c = csvOf(runEnsemble(s, e, {false, 4}));
    const std::string d = csvOf(runEnsemble(s, e, {false, 3}));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a, d);
  }
}

TEST(Ensemble, EnginesUseIndependentStreams) {
  auto s = quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 50, 20);
  SdeSpec sde;
  sde.family = OptimizerFamily::Sgd;
  sde.hyper = *s.optimizer;
  s.sde = sde;
  const auto a = runEnsemble(s, Engine::Discrete), b = runEnsemble(s, Engine::Sde);
  EXPECT_NE(a.lossMean.back(), b.lossMean.back());
}

TEST(Ensemble, StatisticsInvariants) {
  auto s = quadSpec(OptimizerFamily::Adam, 1e-2, 0.5, 64, 100);
  s.recordEvery = 7;
  const auto st = runEnsemble(s, Engine::Discrete);
  EXPECT_EQ(st.records(), 100u / 7 + 1);
  for (std::size_t r = 0; r < st.records(); ++r) {
    EXPECT_EQ(st.stepIndex[r], 7 * r);
    EXPECT_GE(st.lossStd[r], 0.0);
    for (double c : st.stateCov[r]) EXPECT_GE(c, 0.0);
  }
  EXPECT_EQ(st.nAlive + st.divergedCount, st.runs);
}

TEST(Ensemble, DivergedRunsExcludedAndCounted) {
  // SGD with eta * lambda > 2 blows up deterministically for every run
  auto s = quadSpec(OptimizerFamily::Sgd, 1.5, 0.1, 10, 200);
  try {
    runEnsemble(s, Engine::Discrete);
    FAIL() << "expected all-diverged error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("first divergence at step"), std::string::npos) << e.what();
  }
  // Cauchy noise on a quartic: a rare large kick throws SGD past the stable region |x| < sqrt(2 / eta)
  ExperimentSpec h = quadSpec(OptimizerFamily::Sgd, 0.1, 1.0, 200, 300);
  h.landscape = makeSaddle({1, 2}, 1.0, 0.0);
  h.noise = makeStudentNoise(1, {0.05, 0.05});
  const auto st = runEnsemble(h, Engine::Discrete, {true, 0});
  EXPECT_GT(st.divergedCount, 0u);
  EXPECT_GT(st.nAlive, 0u);
  EXPECT_TRUE(st.firstDivergenceStep.has_value());
  for (double v : st.lossMean) EXPECT_TRUE(std::isfinite(v));
  std::size_t withNan = 0;
  for (const auto& p : st.lossPaths) withNan += std::isnan(p.back()) ? 1 : 0;
  EXPECT_EQ(withNan, st.divergedCount);
}

TEST(Ensemble, StandardErrorShrinksLikeInverseSqrtRuns) {
  std::vector<double> logN, logSe;
  for (std::size_t runs : {125u, 500u, 2000u}) {
    auto s = quadSpec(OptimizerFamily::SignSgd, 1e-2, 0.1, runs, 200);
    const auto st = runEnsemble(s, Engine::Discrete);
    // average over the last records to reduce noise in the estimate of lossStd
    const double se = windowMean(observableStdErr(st, "loss"), 0.5);
    logN.push_back(std::log(static_cast<double>(runs)));
    logSe.push_back(std::log(se));
  }
  const double slope = (logSe[2] - logSe[0]) / (logN[2] - logN[0]);
  EXPECT_NEAR(slope, -0.5, 0.1);
}

TEST(WeakError, SelfComparisonIsZero) {
  const auto st = runEnsemble(quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 20, 30), Engine::Discrete);
  const auto w = weakError(st, st);
  EXPECT_EQ(w.maxGap, 0.0);
  for (double g : w.perStepGap) EXPECT_EQ(g, 0.0);
}

TEST(WeakError, MaxGapIsMaxOfPerStep) {
  auto s = quadSpec(OptimizerFamily::SignSgd, 1e-2, 0.1, 50, 60);
  SdeSpec sde;
  sde.family = OptimizerFamily::SignSgd;
  sde.hyper = *s.optimizer;
  s.sde = sde;
  const auto w = weakError(runEnsemble(s, Engine::Discrete), runEnsemble(s, Engine::Sde), "mean_0");
  double mx = 0;
  for (double g : w.perStepGap) mx = std::max(mx, g);
  EXPECT_EQ(w.maxGap, mx);
  EXPECT_EQ(w.perStepGap[w.argMax], mx);
}

TEST(WeakError, MismatchedGridsRejected) {
  const auto a = runEnsemble(quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 5, 30), Engine::Discrete);
  const auto b = runEnsemble(quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 5, 31), Engine::Discrete);
  const auto c = runEnsemble(quadSpec(OptimizerFamily::Sgd, 2e-2, 0.1, 5, 30), Engine::Discrete);
  EXPECT_THROW(weakError(a, b), std::invalid_argument);
  EXPECT_THROW(weakError(a, c), std::invalid_argument);
}

TEST(WeakError, OrnsteinUhlenbeckCalibration) {
  // SGD on lambda = 1 and its SDE share the same law up to O(eta)
  ExperimentSpec s;
  s.id = "ou";
  s.landscape = makeQuadratic({1});
  s.noise = makeGaussianNoise({1.0});
  OptimizerConfig oc;
  oc.family = OptimizerFamily::Sgd;
  oc.eta = 1e-3;
  s.optimizer = oc;
  SdeSpec sde;
  sde.family = OptimizerFamily::Sgd;
  sde.hyper = oc;
  s.sde = sde;
  s.runs = 500;
  s.steps = 2000;
  s.x0 = {0.1};
  s.seed = 5;
  const auto w = weakError(runEnsemble(s, Engine::Discrete), runEnsemble(s, Engine::Sde), "loss");
  EXPECT_LE(w.maxGap, 4 * w.monteCarloStdErr);
}

TEST(Oracle, IdenticalPasses) {
  const auto st = runEnsemble(quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 20, 40), Engine::Discrete);
  for (OracleKind k : {OracleKind::Bound, OracleKind::Point}) {
    const auto r = compareToOracle(st, "loss", st.lossMean, k, 0.0);
    EXPECT_TRUE(r.pass);
    for (double v : r.residuals) EXPECT_EQ(v, 0.0);
  }
}

TEST(Oracle, BoundViolationListsFirstStep) {
  const auto st = runEnsemble(quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 20, 40), Engine::Discrete);
  Vec oracle = st.lossMean;
  for (std::size_t r = 10; r < oracle.size(); ++r) oracle[r] *= 0.5;
  const auto rep = compareToOracle(st, "loss", oracle, OracleKind::Bound, 0.1);
  EXPECT_FALSE(rep.pass);
  ASSERT_TRUE(rep.firstViolation.has_value());
  EXPECT_EQ(*rep.firstViolation, 10u);
  EXPECT_THROW(compareToOracle(st, "loss", Vec(3, 0.0), OracleKind::Bound, 0.1), std::invalid_argument);
}

TEST(Oracle, SgdStationaryVarianceWithinTenPercent) {
  auto s = quadSpec(OptimizerFamily::Sgd, 1e-2, 0.1, 5000, 1500);
  s.x0 = {0.0, 0.0};
  s.recordEvery = 10;
  const auto st = runEnsemble(s, Engine::Discrete);
  // discrete SGD on lambda: exact stationary variance eta sigma^2 / (lambda (2 - eta lambda))
  const double lam = 1.0, exact = 1e-2 * 0.01 / (lam * (2 - 1e-2 * lam));
  const auto r = compareToOracle(st, "cov_0", Vec(st.records(), exact), OracleKind::Point, 0.1);
  EXPECT_TRUE(r.pass) << r.message;
}

TEST(OracleStats, Schema) {
  const auto o = makeOracleStats("id", {0, 1, 2}, {0, 0.1, 0.2}, {3, 2, 1}, {{1}, {2}, {3}}, {{0}, {0}, {0}});
  EXPECT_EQ(o.engine, Engine::Oracle);
  EXPECT_EQ(o.nAlive, 0u);
  EXPECT_EQ(o.dim, 1u);
  EXPECT_EQ(windowMean(Vec{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 9.5);
}
