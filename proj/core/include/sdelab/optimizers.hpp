#pragma once

#include "sdelab/landscapes.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace sdelab {

enum class OptimizerFamily { Sgd, SignSgd, Rmsprop, RmspropW, Adam, AdamW };

OptimizerFamily parseFamily(const std::string& name);
std::string toString(OptimizerFamily family);
bool usesFirstMoment(OptimizerFamily family);  // adam, adamw
bool usesSecondMoment(OptimizerFamily family); // rmsprop(w), adam(w)
bool isDecoupled(OptimizerFamily family);      // rmspropw, adamw

// RMSprop(W) read their single averaging parameter from beta2.
struct OptimizerConfig {
  OptimizerFamily family = OptimizerFamily::Sgd;
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double theta = 0.0;
  double epsilon = 1e-8;
  double l2 = 0.0;
  double schedulerExponent = 0.0;
  double batch = 1.0;
};

struct OptimizerState {
  Vec x;
  Vec m;
  Vec v;
  std::uint64_t k = 0;
  bool diverged = false;
};

enum class ScalingRuleKind { Ours, Malladi, LinearSgd };

struct ScalingRule {
  ScalingRuleKind rule = ScalingRuleKind::Ours;
  double delta = 1.0;
};

ScalingRuleKind parseScalingRule(const std::string& name);
std::string toString(ScalingRuleKind rule);

// Throws std::invalid_argument naming the violated constraint.
void validate(const OptimizerConfig& config);

OptimizerState makeState(Vec x0);

// One in-place update. A non-finite gradient component marks the state diverged
// and leaves it untouched.
void stepInPlace(const OptimizerConfig& config, OptimizerState& state, std::span<const double> stochasticGradient,
                 double schedulerValue);
OptimizerState step(const OptimizerConfig& config, const OptimizerState& state,
                    std::span<const double> stochasticGradient, double schedulerValue);

// ours:       eta*sqrt(delta), beta_i -> 1 - sqrt(delta)(1 - beta_i), theta*sqrt(delta), batch*delta
// malladi:    eta*sqrt(delta), beta_i -> 1 - delta(1 - beta_i), batch*delta
// linear-sgd: eta*delta, batch*delta (SGD only)
OptimizerConfig applyScaling(const OptimizerConfig& config, const ScalingRule& rule);
// Exact inverse of applyScaling for the same rule.
OptimizerConfig invertScaling(const OptimizerConfig& config, const ScalingRule& rule);

// (t + 1)^(-vartheta); 1 when vartheta == 0.
double schedulerValue(double vartheta, std::uint64_t t);

} // namespace sdelab
