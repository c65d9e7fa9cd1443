#include "sdelab/experiment.hpp"

#include "sdelab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sdelab {

namespace {

template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };

Vec broadcast(const std::vector<double>& v, std::size_t d, const std::string& key) {
  if (v.size() == 1) return Vec(d, v.front());
  if (v.size() != d) throw ConfigError("key '" + key + "' needs 1 or " + std::to_string(d) + " entries");
  return v;
}

OptimizerConfig optimizerFromConfig(const Config& cfg) {
  OptimizerConfig c;
  c.family = parseFamily(cfg.string("optimizer.family"));
  c.eta = cfg.number("optimizer.eta");
  c.beta1 = cfg.number("optimizer.beta1", c.beta1);
  c.beta2 = cfg.number("optimizer.beta2", cfg.number("optimizer.beta", c.beta2));
  c.theta = cfg.number("optimizer.theta", 0.0);
  c.epsilon = cfg.number("optimizer.epsilon", c.epsilon);
  c.l2 = cfg.number("optimizer.l2", 0.0);
  c.schedulerExponent = cfg.number("optimizer.scheduler_exponent", 0.0);
  c.batch = cfg.number("noise.batch", 1.0);
  return c;
}

} // namespace

NoiseModel withBatch(const NoiseModel& noise, double batch) {
  NoiseModel out = noise;
  std::visit([batch](auto& n) { n.batch = batch; }, out);
  return out;
}

NoiseModel withScale(const NoiseModel& noise, double factor) {
  NoiseModel out = noise;
  std::visit(Overloaded{
                 [factor](GaussianDiagNoise& n) {
                   for (double& s : n.sigmas) s *= factor;
                 },
                 [factor](StudentTNoise& n) {
                   for (double& s : n.scale) s *= factor;
                 },
                 [factor](StateScaledNoise& n) { n.sigma *= factor; },
             },
             out);
  return out;
}

ExperimentSpec specFromConfig(const Config& cfg) {
  ExperimentSpec spec;
  spec.id = cfg.string("experiment.id", spec.id);
  spec.runs = static_cast<std::size_t>(cfg.number("experiment.runs", 500));
  spec.steps = static_cast<std::size_t>(cfg.number("experiment.steps", 1000));
  spec.seed = static_cast<std::uint64_t>(cfg.number("experiment.seed", 0));
  spec.recordEvery = static_cast<std::size_t>(cfg.number("experiment.record_every", 1));
  spec.threads = static_cast<unsigned>(cfg.number("experiment.threads", 0));
  spec.oracles = cfg.strings("experiment.oracles", {});
  const auto obs = cfg.strings("experiment.observables", {"loss", "mean", "cov"});
  spec.observables = Observables{false, false, false, false};
  for (const auto& o : obs) {
    if (o == "loss") spec.observables.loss = true;
    else if (o == "mean") spec.observables.mean = true;
    else if (o == "cov") spec.observables.cov = true;
    else if (o == "phases") spec.observables.phases = true;
    else throw ConfigError("unknown observable '" + o + "'");
  }

  // landscape
  const std::string lk = cfg.string("landscape.kind", "quadratic");
  bool phiSpace = false;
  PowerLawQuadratic powerLaw;
  if (lk == "quadratic") {
    spec.landscape = makeQuadratic(cfg.numbers("landscape.lambdas"), cfg.boolean("landscape.convex", true));
  } else if (lk == "saddle") {
    spec.landscape = makeSaddle(cfg.numbers("landscape.lambdas"), cfg.number("landscape.quartic", 1.0),
                                cfg.number("landscape.cubic", 0.0));
  } else if (lk == "powerlaw") {
    powerLaw = makePowerLaw(static_cast<std::size_t>(cfg.number("landscape.v")),
                            static_cast<std::size_t>(cfg.number("landscape.d")), cfg.number("landscape.alpha"),
                            static_cast<std::uint64_t>(cfg.number("landscape.seed", 0)));
    spec.landscape = powerLaw;
  } else {
    throw ConfigError("unknown landscape.kind '" + lk + "'");
  }

  // noise
  const std::string nk = cfg.string("noise.kind", "gaussian");
  const double batch = cfg.number("noise.batch", 1.0);
  if (nk == "regression") {
    if (lk != "powerlaw") throw ConfigError("noise.kind = \"regression\" requires landscape.kind = \"powerlaw\"");
    phiSpace = true;
    spec.landscape = powerLaw.phiSpace();
  }
  const std::size_t d = dimension(spec.landscape);
  if (nk == "gaussian") {
    spec.noise = makeGaussianNoise(broadcast(cfg.numbers("noise.sigma"), d, "noise.sigma"), batch);
  } else if (nk == "student") {
    spec.noise = makeStudentNoise(static_cast<int>(cfg.number("noise.nu")),
                                  broadcast(cfg.numbers("noise.sigma"), d, "noise.sigma"), batch);
  } else {
    const StateNoiseKind kind = parseStateNoiseKind(nk);
    Vec anchor;
    if (kind == StateNoiseKind::FrozenHessian) anchor = broadcast(cfg.numbers("noise.anchor"), d, "noise.anchor");
    spec.noise = makeStateNoise(kind, cfg.number("noise.sigma", 1.0), spec.landscape, std::move(anchor),
                                cfg.number("noise.anchor_loss", 0.0), batch);
  }

  // optimizer + scaling
  if (cfg.has("optimizer.family")) {
    OptimizerConfig oc = optimizerFromConfig(cfg);
    if (cfg.has("scaling.rule")) {
      const ScalingRule rule{parseScalingRule(cfg.string("scaling.rule")), cfg.number("scaling.delta", 1.0)};
      oc = applyScaling(oc, rule);
    }
    validate(oc);
    spec.optimizer = oc;
    spec.noise = withBatch(spec.noise, oc.batch);
  }

  // sde
  if (cfg.has("sde.family")) {
    SdeSpec s;
    s.family = parseFamily(cfg.string("sde.family"));
    s.variant = parseSignSgdVariant(cfg.string("sde.variant", "erf"));
    s.baseline = parseBaseline(cfg.string("sde.baseline", "ours"));
    s.dt = cfg.number("sde.dt", 0.0);
    s.steps = static_cast<std::size_t>(cfg.number("sde.steps", 0));
    s.kappa = cfg.number("sde.kappa", 1.0);
    if (spec.optimizer) {
      s.hyper = *spec.optimizer;
    } else {
      OptimizerConfig h;
      h.family = s.family;
      h.eta = cfg.number("sde.eta");
      h.beta1 = cfg.number("sde.beta1", h.beta1);
      h.beta2 = cfg.number("sde.beta2", cfg.number("sde.beta", h.beta2));
      h.theta = cfg.number("sde.theta", 0.0);
      h.epsilon = cfg.number("sde.epsilon", h.epsilon);
      h.schedulerExponent = cfg.number("sde.scheduler_exponent", 0.0);
      s.hyper = h;
    }
    spec.sde = s;
  }

  // initial point, shared by every run
  if (cfg.has("experiment.x0")) {
    spec.x0 = broadcast(cfg.numbers("experiment.x0"), phiSpace ? powerLaw.d : d, "experiment.x0");
  } else if (cfg.has("experiment.x0_std")) {
    Rng rng(mixSeed(static_cast<std::uint64_t>(cfg.number("experiment.x0_seed", 0)), 0xA11CE));
    const double sd = cfg.number("experiment.x0_std");
    spec.x0.resize(phiSpace ? powerLaw.d : d);
    for (double& v : spec.x0) v = sd * rng.normal();
  } else {
    spec.x0.assign(phiSpace ? powerLaw.d : d, 0.0);
  }
  if (phiSpace) spec.x0 = powerLaw.residual(spec.x0); // theta0 -> phi0

  validate(spec);
  return spec;
}

void validate(const ExperimentSpec& spec) {
  if (!spec.optimizer && !spec.sde) throw std::invalid_argument("experiment needs an optimizer and/or an sde table");
  if (spec.runs < 1) throw std::invalid_argument("experiment.runs must be >= 1");
  if (spec.recordEvery < 1) throw std::invalid_argument("experiment.record_every must be >= 1");
  const std::size_t d = dimension(spec.landscape);
  if (spec.x0.size() != d) throw std::invalid_argument("experiment.x0 dimension does not match the landscape");
  auto noiseDim = std::visit(Overloaded{
                                 [](const GaussianDiagNoise& n) { return n.sigmas.size(); },
                                 [](const StudentTNoise& n) { return n.scale.size(); },
                                 [d](const StateScaledNoise&) { return d; },
                             },
                             spec.noise);
  if (noiseDim != d) throw std::invalid_argument("noise dimension does not match the landscape");
  if (spec.optimizer) validate(*spec.optimizer);
  if (spec.optimizer && spec.sde) {
    const OptimizerFamily a = spec.optimizer->family, b = spec.sde->family;
    auto base = [](OptimizerFamily f) {
      if (f == OptimizerFamily::RmspropW) return OptimizerFamily::Rmsprop;
      if (f == OptimizerFamily::AdamW) return OptimizerFamily::Adam;
      return f;
    };
    if (base(a) != base(b))
      throw std::invalid_argument("sde.family '" + toString(b) + "' does not model optimizer.family '" + toString(a) + "'");
  }
  if (spec.optimizer && spec.optimizer->family != OptimizerFamily::SignSgd && !hasFiniteVariance(spec.noise) &&
      spec.sde)
    throw std::invalid_argument("the SDE of this optimizer needs finite-variance noise");
}

double sdeStepSize(const ExperimentSpec& spec) {
  if (!spec.sde) throw std::invalid_argument("experiment has no sde table");
  return spec.sde->dt > 0.0 ? spec.sde->dt : spec.sde->hyper.eta;
}

std::size_t sdeSteps(const ExperimentSpec& spec) {
  if (!spec.sde) throw std::invalid_argument("experiment has no sde table");
  return spec.sde->steps > 0 ? spec.sde->steps : spec.steps;
}

SdeSystem buildSde(const ExperimentSpec& spec) {
  if (!spec.sde) throw std::invalid_argument("experiment has no sde table");
  const SdeSpec& s = *spec.sde;
  const OptimizerConfig& h = s.hyper;
  switch (s.family) {
  case OptimizerFamily::SignSgd:
    return buildSignSgdSde(spec.landscape, spec.noise, s.variant, h.eta, h.schedulerExponent);
  case OptimizerFamily::Sgd:
    return buildSgdSde(spec.landscape, spec.noise, s.kappa, h.eta);
  case OptimizerFamily::Rmsprop:
  case OptimizerFamily::RmspropW:
    return buildRmspropSde(spec.landscape, spec.noise, h, h.theta, s.baseline);
  case OptimizerFamily::Adam:
  case OptimizerFamily::AdamW:
    return buildAdamSde(spec.landscape, spec.noise, h, h.theta, s.baseline, sdeStepSize(spec));
  }
  throw std::invalid_argument("unsupported sde.family");
}

} // namespace sdelab
