#include "sdelab/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace sdelab {

OptimizerFamily parseFamily(const std::string& name) {
  if (name == "sgd") return OptimizerFamily::Sgd;
  if (name == "signsgd") return OptimizerFamily::SignSgd;
  if (name == "rmsprop") return OptimizerFamily::Rmsprop;
  if (name == "rmspropw") return OptimizerFamily::RmspropW;
  if (name == "adam") return OptimizerFamily::Adam;
  if (name == "adamw") return OptimizerFamily::AdamW;
  throw std::invalid_argument("unknown optimizer family '" + name + "'");
}

std::string toString(OptimizerFamily family) {
  switch (family) {
  case OptimizerFamily::Sgd: return "sgd";
  case OptimizerFamily::SignSgd: return "signsgd";
  case OptimizerFamily::Rmsprop: return "rmsprop";
  case OptimizerFamily::RmspropW: return "rmspropw";
  case OptimizerFamily::Adam: return "adam";
  case OptimizerFamily::AdamW: return "adamw";
  }
  return "?";
}

bool usesFirstMoment(OptimizerFamily f) { return f == OptimizerFamily::Adam || f == OptimizerFamily::AdamW; }

bool usesSecondMoment(OptimizerFamily f) {
  return f == OptimizerFamily::Rmsprop || f == OptimizerFamily::RmspropW || usesFirstMoment(f);
}

bool isDecoupled(OptimizerFamily f) { return f == OptimizerFamily::RmspropW || f == OptimizerFamily::AdamW; }

ScalingRuleKind parseScalingRule(const std::string& name) {
  if (name == "ours") return ScalingRuleKind::Ours;
  if (name == "malladi") return ScalingRuleKind::Malladi;
  if (name == "linear-sgd") return ScalingRuleKind::LinearSgd;
  throw std::invalid_argument("unknown scaling rule '" + name + "'");
}

std::string toString(ScalingRuleKind rule) {
  switch (rule) {
  case ScalingRuleKind::Ours: return "ours";
  case ScalingRuleKind::Malladi: return "malladi";
  case ScalingRuleKind::LinearSgd: return "linear-sgd";
  }
  return "?";
}

void validate(const OptimizerConfig& c) {
  if (!(c.eta > 0.0)) throw std::invalid_argument("optimizer.eta must be > 0");
  if (usesSecondMoment(c.family) && !(c.epsilon > 0.0)) throw std::invalid_argument("optimizer.epsilon must be > 0");
  if (usesFirstMoment(c.family) && !(c.beta1 >= 0.0 && c.beta1 < 1.0))
    throw std::invalid_argument("optimizer.beta1 must lie in [0, 1)");
  if (usesSecondMoment(c.family) && !(c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw std::invalid_argument("optimizer.beta2 must lie in [0, 1)");
  if (c.theta < 0.0) throw std::invalid_argument("optimizer.theta must be >= 0");
  if (c.theta > 0.0 && !isDecoupled(c.family))
    throw std::invalid_argument("optimizer.theta > 0 requires rmspropw or adamw");
  if (c.l2 < 0.0) throw std::invalid_argument("optimizer.l2 must be >= 0");
  if (c.l2 > 0.0 && c.theta > 0.0) throw std::invalid_argument("optimizer.l2 > 0 requires theta = 0");
  if (c.schedulerExponent < 0.0) throw std::invalid_argument("optimizer.scheduler_exponent must be >= 0");
  if (!(c.batch >= 1.0)) throw std::invalid_argument("batch must be >= 1");
}

OptimizerState makeState(Vec x0) {
  OptimizerState s;
  s.m.assign(x0.size(), 0.0);
  s.v.assign(x0.size(), 0.0);
  s.x = std::move(x0);
  return s;
}

void stepInPlace(const OptimizerConfig& c, OptimizerState& s, std::span<const double> g, double sched) {
  const std::size_t d = s.x.size();
  if (g.size() != d) throw std::invalid_argument("step: gradient dimension mismatch");
  for (double gi : g)
    if (!std::isfinite(gi)) {
      s.diverged = true;
      return;
    }
  const double lr = c.eta * sched;
  const double decay = lr * c.theta;
  switch (c.family) {
  case OptimizerFamily::Sgd:
    for (std::size_t i = 0; i < d; ++i) s.x[i] -= lr * (g[i] + c.l2 * s.x[i]);
    break;
  case OptimizerFamily::SignSgd:
    for (std::size_t i = 0; i < d; ++i) {
      const double gi = g[i] + c.l2 * s.x[i];
      const double sg = gi > 0.0 ? 1.0 : (gi < 0.0 ? -1.0 : 0.0);
      s.x[i] -= lr * sg;
    }
    break;
  case OptimizerFamily::Rmsprop:
  case OptimizerFamily::RmspropW: {
    const double b = c.beta2;
    for (std::size_t i = 0; i < d; ++i) {
      const double gi = g[i] + c.l2 * s.x[i];
      s.v[i] = b * s.v[i] + (1.0 - b) * gi * gi;
      s.x[i] = s.x[i] - lr * gi / (std::sqrt(s.v[i]) + c.epsilon) - decay * s.x[i];
    }
    break;
  }
  case OptimizerFamily::Adam:
  case OptimizerFamily::AdamW: {
    const double kk = static_cast<double>(s.k + 1);
    const double c1 = 1.0 - std::pow(c.beta1, kk);
    const double c2 = 1.0 - std::pow(c.beta2, kk);
    for (std::size_t i = 0; i < d; ++i) {
      const double gi = g[i] + c.l2 * s.x[i];
      s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * gi;
      s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * gi * gi;
      const double mh = s.m[i] / c1;
      const double vh = s.v[i] / c2;
      s.x[i] = s.x[i] - lr * mh / (std::sqrt(vh) + c.epsilon) - decay * s.x[i];
    }
    break;
  }
  }
  ++s.k;
  for (double xi : s.x)
    if (!std::isfinite(xi)) {
      s.diverged = true;
      break;
    }
}

OptimizerState step(const OptimizerConfig& c, const OptimizerState& s, std::span<const double> g, double sched) {
  OptimizerState out = s;
  stepInPlace(c, out, g, sched);
  return out;
}

namespace {

double scaledBeta(double beta, double factor, const char* name) {
  const double b = 1.0 - factor * (1.0 - beta);
  if (b < 0.0 || b >= 1.0)
    throw std::invalid_argument(std::string("scaling rejected: transformed ") + name + " = " + std::to_string(b) +
                                " outside [0, 1)");
  return b;
}

OptimizerConfig scaleBy(const OptimizerConfig& c, ScalingRuleKind rule, double delta) {
  OptimizerConfig out = c;
  const double sd = std::sqrt(delta);
  switch (rule) {
  case ScalingRuleKind::Ours:
    out.eta = sd * c.eta;
    out.beta1 = scaledBeta(c.beta1, sd, "beta1");
    out.beta2 = scaledBeta(c.beta2, sd, "beta2");
    out.theta = sd * c.theta;
    out.batch = delta * c.batch;
    break;
  case ScalingRuleKind::Malladi:
    out.eta = sd * c.eta;
    out.beta1 = scaledBeta(c.beta1, delta, "beta1");
    out.beta2 = scaledBeta(c.beta2, delta, "beta2");
    out.batch = delta * c.batch;
    break;
  case ScalingRuleKind::LinearSgd:
    if (c.family != OptimizerFamily::Sgd) throw std::invalid_argument("linear-sgd scaling applies to sgd only");
    out.eta = delta * c.eta;
    out.batch = delta * c.batch;
    break;
  }
  return out;
}

} // namespace

OptimizerConfig applyScaling(const OptimizerConfig& c, const ScalingRule& r) {
  if (!(r.delta >= 1.0)) throw std::invalid_argument("scaling.delta must be >= 1");
  return scaleBy(c, r.rule, r.delta);
}

OptimizerConfig invertScaling(const OptimizerConfig& c, const ScalingRule& r) {
  if (!(r.delta >= 1.0)) throw std::invalid_argument("scaling.delta must be >= 1");
  return scaleBy(c, r.rule, 1.0 / r.delta);
}

double schedulerValue(double vartheta, std::uint64_t t) {
  if (vartheta == 0.0) return 1.0;
  return std::pow(static_cast<double>(t) + 1.0, -vartheta);
}

} // namespace sdelab
