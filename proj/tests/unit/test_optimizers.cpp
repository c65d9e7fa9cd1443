#include "sdelab/noise.hpp"
#include "sdelab/optimizers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdelab;

namespace {

OptimizerConfig make(OptimizerFamily f, double eta) {
  OptimizerConfig c;
  c.family = f;
  c.eta = eta;
  return c;
}

} // namespace

TEST(Optimizers, SignSgdExample) {
  const auto s = step(make(OptimizerFamily::SignSgd, 0.01), makeState({0.5, -0.2}), Vec{0.3, -0.1}, 1.0);
  EXPECT_DOUBLE_EQ(s.x[0], 0.49);
  EXPECT_DOUBLE_EQ(s.x[1], -0.19);
  EXPECT_EQ(s.k, 1u);
}

TEST(Optimizers, SignOfZeroIsZero) {
  const auto s = step(make(OptimizerFamily::SignSgd, 0.01), makeState({0.5}), Vec{0.0}, 1.0);
  EXPECT_EQ(s.x[0], 0.5);
}

TEST(Optimizers, SgdExample) {
  const auto s = step(make(OptimizerFamily::Sgd, 0.1), makeState({1.0}), Vec{2.0}, 1.0);
  EXPECT_DOUBLE_EQ(s.x[0], 0.8);
}

TEST(Optimizers, AdamFirstStepIsNormalizedGradient) {
  OptimizerConfig c = make(OptimizerFamily::Adam, 0.01);
  const Vec g{0.3, -2.0, 1e-3};
  const auto s = step(c, makeState({0, 0, 0}), g, 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.x[i], -0.01 * g[i] / (std::abs(g[i]) + c.epsilon), 1e-15);
  EXPECT_EQ(s.m.size(), 3u);
  EXPECT_EQ(s.v.size(), 3u);
}

TEST(Optimizers, InitialMomentsAreZero) {
  const auto s = makeState({1, 2});
  EXPECT_EQ(s.k, 0u);
  for (double v : s.m) EXPECT_EQ(v, 0.0);
  for (double v : s.v) EXPECT_EQ(v, 0.0);
}

TEST(Optimizers, RmspropBetaZeroIsSignMagnitude) {
  OptimizerConfig c = make(OptimizerFamily::Rmsprop, 0.05);
  c.beta2 = 0.0;
  const Vec g{0.7, -0.01};
  const auto s = step(c, makeState({1, 1}), g, 1.0);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(s.x[i], 1.0 - 0.05 * g[i] / (std::abs(g[i]) + c.epsilon), 1e-15);
}

TEST(Optimizers, AdamWThetaZeroEqualsAdamBitForBit) {
  OptimizerConfig a = make(OptimizerFamily::Adam, 1e-2), w = make(OptimizerFamily::AdamW, 1e-2);
  OptimizerState sa = makeState({0.5, -1.0, 2.0}), sw = sa;
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    const Vec g{rng.normal(), rng.normal(), rng.normal()};
    stepInPlace(a, sa, g, 1.0);
    stepInPlace(w, sw, g, 1.0);
    for (int i = 0; i < 3; ++i) ASSERT_EQ(sa.x[i], sw.x[i]);
  }
}

TEST(Optimizers, CoupledL2DiffersFromDecoupled) {
  const Landscape f = makeQuadratic({1, 2});
  const NoiseModel n = makeGaussianNoise({0.1, 0.1});
  OptimizerConfig l2 = make(OptimizerFamily::Adam, 1e-2), dw = make(OptimizerFamily::AdamW, 1e-2);
  l2.l2 = 0.5;
  dw.theta = 0.5;
  OptimizerState s1 = makeState({1, 1}), s2 = s1;
  Rng rng(4);
  const Vec z = sample(n, f, s1.x, rng);
  Vec g = gradient(f, s1.x);
  for (int i = 0; i < 2; ++i) g[i] += z[i];
  stepInPlace(l2, s1, g, 1.0);
  stepInPlace(dw, s2, g, 1.0);
  EXPECT_GT(std::abs(s1.x[0] - s2.x[0]) + std::abs(s1.x[1] - s2.x[1]), 1e-6);
}

TEST(Optimizers, DecayUsesScheduledRate) {
  OptimizerConfig c = make(OptimizerFamily::AdamW, 0.1);
  c.theta = 2.0;
  // zero gradient: update is pure decay x -= eta * sched * theta * x
  const auto s = step(c, makeState({1.0}), Vec{0.0}, 0.5);
  EXPECT_DOUBLE_EQ(s.x[0], 1.0 - 0.1 * 0.5 * 2.0);
}

TEST(Optimizers, SecondMomentStaysNonNegative) {
  for (auto fam : {OptimizerFamily::Rmsprop, OptimizerFamily::Adam, OptimizerFamily::AdamW}) {
    OptimizerConfig c = make(fam, 1e-3);
    if (fam == OptimizerFamily::AdamW) c.theta = 0.1;
    OptimizerState s = makeState({1, -1});
    Rng rng(17);
    for (int k = 0; k < 100000; ++k) {
      const Vec g{10 * rng.normal(), 1e-3 * rng.normal()};
      stepInPlace(c, s, g, 1.0);
      ASSERT_GE(s.v[0], 0.0);
      ASSERT_GE(s.v[1], 0.0);
    }
  }
}

TEST(Optimizers, NonFiniteGradientMarksDiverged) {
  OptimizerState s = makeState({1.0});
  stepInPlace(make(OptimizerFamily::Sgd, 0.1), s, Vec{std::nan("")}, 1.0);
  EXPECT_TRUE(s.diverged);
  EXPECT_EQ(s.x[0], 1.0);
}

TEST(Optimizers, ValidationRejectsBadConfigs) {
  OptimizerConfig c = make(OptimizerFamily::Adam, 0.0);
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.eta = 1e-3;
  c.theta = 0.1;
  EXPECT_THROW(validate(c), std::invalid_argument); // theta needs a decoupled family
  c = make(OptimizerFamily::AdamW, 1e-3);
  c.theta = 0.1;
  c.l2 = 0.1;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = make(OptimizerFamily::Adam, 1e-3);
  c.beta1 = 1.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_THROW(parseFamily("nadam"), std::invalid_argument);
}

TEST(Scaling, Examples) {
  OptimizerConfig c = make(OptimizerFamily::Adam, 1e-3);
  c.beta2 = 0.95;
  EXPECT_NEAR(applyScaling(c, {ScalingRuleKind::Ours, 4}).beta2, 0.9, 1e-15);
  EXPECT_NEAR(applyScaling(c, {ScalingRuleKind::Malladi, 4}).beta2, 0.8, 1e-15);
  const auto id = applyScaling(c, {ScalingRuleKind::Ours, 1});
  EXPECT_EQ(id.eta, c.eta);
  EXPECT_EQ(id.beta1, c.beta1);
  EXPECT_EQ(id.beta2, c.beta2);
  EXPECT_EQ(id.batch, c.batch);
}

TEST(Scaling, RuleDetails) {
  OptimizerConfig c = make(OptimizerFamily::AdamW, 1e-3);
  c.theta = 1.0;
  const auto o = applyScaling(c, {ScalingRuleKind::Ours, 4});
  EXPECT_DOUBLE_EQ(o.eta, 2e-3);
  EXPECT_DOUBLE_EQ(o.theta, 2.0);
  EXPECT_DOUBLE_EQ(o.batch, 4.0);
  EXPECT_NEAR(o.beta1, 0.8, 1e-15);
  const auto m = applyScaling(c, {ScalingRuleKind::Malladi, 4});
  EXPECT_DOUBLE_EQ(m.theta, 1.0);
  EXPECT_DOUBLE_EQ(m.eta, 2e-3);
  EXPECT_THROW(applyScaling(c, {ScalingRuleKind::LinearSgd, 4}), std::invalid_argument);
  const auto l = applyScaling(make(OptimizerFamily::Sgd, 1e-3), {ScalingRuleKind::LinearSgd, 4});
  EXPECT_DOUBLE_EQ(l.eta, 4e-3);
}

TEST(Scaling, RejectsNegativeBetaNamingIt) {
  OptimizerConfig c = make(OptimizerFamily::Adam, 1e-3);
  c.beta1 = 0.5;
  try {
    applyScaling(c, {ScalingRuleKind::Malladi, 4});
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("beta1"), std::string::npos);
  }
  EXPECT_THROW(applyScaling(c, {ScalingRuleKind::Ours, 0.5}), std::invalid_argument);
}

TEST(Scaling, RoundTrip) {
  OptimizerConfig c = make(OptimizerFamily::AdamW, 3e-4);
  c.beta1 = 0.9;
  c.beta2 = 0.999;
  c.theta = 0.3;
  c.batch = 8;
  for (auto rule : {ScalingRuleKind::Ours, ScalingRuleKind::Malladi})
    for (double delta : {1.0, 2.0, 4.0, 9.0}) {
      const auto back = invertScaling(applyScaling(c, {rule, delta}), {rule, delta});
      EXPECT_NEAR(back.eta, c.eta, 1e-12 * c.eta);
      EXPECT_NEAR(back.beta1, c.beta1, 1e-12);
      EXPECT_NEAR(back.beta2, c.beta2, 1e-12);
      EXPECT_NEAR(back.theta, c.theta, 1e-12);
      EXPECT_NEAR(back.batch, c.batch, 1e-12);
    }
}

TEST(Scheduler, Values) {
  EXPECT_EQ(schedulerValue(0.0, 12345), 1.0);
  EXPECT_DOUBLE_EQ(schedulerValue(0.5, 3), 0.5);
  EXPECT_EQ(schedulerValue(1.5, 0), 1.0);
}
