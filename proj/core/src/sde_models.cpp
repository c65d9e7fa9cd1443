#include "sdelab/sde_models.hpp"

#include <numbers>
#include <stdexcept>

namespace sdelab {

namespace {

struct Scratch {
  Vec g, s, cov;
  void resize(std::size_t d) {
    g.resize(d);
    s.resize(d);
    cov.resize(d);
  }
};

Scratch& scratch(std::size_t d) {
  thread_local Scratch sc;
  sc.resize(d);
  return sc;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

Vec SdeSystem::drift(double t, std::span<const double> state) const {
  Vec b(stateDims.size()), s(stateDims.size());
  coefficients(t, state, b, s);
  return b;
}

Vec SdeSystem::diffusionDiag(double t, std::span<const double> state) const {
  Vec b(stateDims.size()), s(stateDims.size());
  coefficients(t, state, b, s);
  return s;
}

SignSgdVariant parseSignSgdVariant(const std::string& name) {
  if (name == "full") return SignSgdVariant::Full;
  if (name == "erf") return SignSgdVariant::Erf;
  if (name == "phase1-ode") return SignSgdVariant::Phase1Ode;
  if (name == "phase3") return SignSgdVariant::Phase3;
  if (name == "student") return SignSgdVariant::Student;
  throw std::invalid_argument("unknown SignSGD SDE variant '" + name + "'");
}

std::string toString(SignSgdVariant v) {
  switch (v) {
  case SignSgdVariant::Full: return "full";
  case SignSgdVariant::Erf: return "erf";
  case SignSgdVariant::Phase1Ode: return "phase1-ode";
  case SignSgdVariant::Phase3: return "phase3";
  case SignSgdVariant::Student: return "student";
  }
  return "?";
}

SdeBaseline parseBaseline(const std::string& name) {
  if (name == "ours") return SdeBaseline::Ours;
  if (name == "malladi") return SdeBaseline::Malladi;
  throw std::invalid_argument("unknown SDE baseline '" + name + "'");
}

std::string toString(SdeBaseline b) { return b == SdeBaseline::Ours ? "ours" : "malladi"; }

SdeSystem buildSignSgdSde(const Landscape& f, const NoiseModel& noise, SignSgdVariant variant, double eta,
                          double schedulerExponent) {
  if (!(eta > 0.0)) throw std::invalid_argument("SignSGD SDE: eta must be > 0");
  const bool gaussianConst = std::holds_alternative<GaussianDiagNoise>(noise);
  const bool student = std::holds_alternative<StudentTNoise>(noise);
  if (variant == SignSgdVariant::Erf && !gaussianConst)
    throw std::invalid_argument("SignSGD SDE: erf variant requires Gaussian diagonal noise");
  if (variant == SignSgdVariant::Student && !student)
    throw std::invalid_argument("SignSGD SDE: student variant requires Student-t noise");
  const std::size_t d = dimension(f);

  SdeSystem sys;
  sys.name = "signsgd-" + toString(variant);
  sys.stateDims = StateLayout{d, false, false};
  sys.sqrtEta = std::sqrt(eta);
  sys.noisyX = variant != SignSgdVariant::Phase1Ode;
  sys.initialState = [](std::span<const double> x0) { return Vec(x0.begin(), x0.end()); };
  const double slope = signDriftSlope(noise);

  sys.coefficients = [f, noise, variant, eta, schedulerExponent, slope, d](
                         double t, std::span<const double> x, std::span<double> b, std::span<double> s) {
    Scratch& sc = scratch(d);
    gradientInto(f, x, sc.g);
    const double sched = schedulerExponent == 0.0 ? 1.0 : std::pow(t / eta + 1.0, -schedulerExponent);
    if (variant == SignSgdVariant::Phase1Ode) {
      for (std::size_t i = 0; i < d; ++i) {
        b[i] = -sched * sgn(sc.g[i]);
        s[i] = 0.0;
      }
      return;
    }
    noiseScaleInto(noise, f, x, sc.s);
    for (std::size_t i = 0; i < d; ++i) {
      if (variant == SignSgdVariant::Phase3) {
        const double r = sc.s[i] > 0.0 ? sc.g[i] / sc.s[i] : 0.0;
        const double lin = slope * r;
        const double rad = 1.0 - lin * lin;
        b[i] = -sched * lin;
        s[i] = sched * (rad > 0.0 ? std::sqrt(rad) : 0.0);
      } else {
        b[i] = -sched * signDrift(noise, sc.g[i], sc.s[i]);
        s[i] = sched * signDiffusion(noise, sc.g[i], sc.s[i]);
      }
    }
  };
  return sys;
}

SdeSystem buildSgdSde(const Landscape& f, const NoiseModel& noise, double kappa, double eta) {
  if (!(kappa > 0.0)) throw std::invalid_argument("SGD SDE: kappa must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("SGD SDE: eta must be > 0");
  if (!hasFiniteVariance(noise)) throw std::invalid_argument("SGD SDE: noise covariance is undefined (infinite variance)");
  const std::size_t d = dimension(f);
  SdeSystem sys;
  sys.name = "sgd";
  sys.stateDims = StateLayout{d, false, false};
  sys.sqrtEta = std::sqrt(eta);
  sys.noisyX = true;
  sys.initialState = [](std::span<const double> x0) { return Vec(x0.begin(), x0.end()); };
  sys.coefficients = [f, noise, kappa, d](double, std::span<const double> x, std::span<double> b,
                                          std::span<double> s) {
    Scratch& sc = scratch(d);
    gradientInto(f, x, sc.g);
    const Vec cov = covarianceDiag(noise, f, x);
    for (std::size_t i = 0; i < d; ++i) {
      b[i] = -kappa * sc.g[i];
      s[i] = kappa * std::sqrt(cov[i]);
    }
  };
  return sys;
}

namespace {

// V(0) is the expected first EMA update (1 - beta)((grad f(x0))^2 + diag Sigma(x0)), shared
// by both baselines so they start from the same point.
std::function<Vec(std::span<const double>)> momentInitialState(const Landscape& f, const NoiseModel& noise,
                                                               StateLayout L, double beta) {
  return [f, noise, L, beta](std::span<const double> x0) {
    Vec st(L.size(), 0.0);
    for (std::size_t i = 0; i < L.d; ++i) st[i] = x0[i];
    const Vec g = gradient(f, x0);
    const Vec cov = covarianceDiag(noise, f, x0);
    for (std::size_t i = 0; i < L.d; ++i) st[L.vOffset() + i] = (1.0 - beta) * (g[i] * g[i] + cov[i]);
    return st;
  };
}

} // namespace

SdeSystem buildRmspropSde(const Landscape& f, const NoiseModel& noise, const OptimizerConfig& hyper,
                          double theta, SdeBaseline baseline) {
  if (!(hyper.beta2 >= 0.0 && hyper.beta2 < 1.0)) throw std::invalid_argument("RMSprop SDE: beta must lie in [0, 1)");
  if (!(hyper.eta > 0.0) || !(hyper.epsilon > 0.0))
    throw std::invalid_argument("RMSprop SDE: eta and epsilon must be > 0");
  if (theta < 0.0) throw std::invalid_argument("RMSprop SDE: theta must be >= 0");
  if (!hasFiniteVariance(noise)) throw std::invalid_argument("RMSprop SDE: noise covariance is undefined");
  const std::size_t d = dimension(f);
  const StateLayout L{d, false, true};
  const double rho = (1.0 - hyper.beta2) / hyper.eta;
  const double eps = hyper.epsilon;
  const bool ours = baseline == SdeBaseline::Ours;

  SdeSystem sys;
  sys.name = std::string(theta > 0.0 ? "rmspropw-" : "rmsprop-") + toString(baseline);
  sys.stateDims = L;
  sys.sqrtEta = std::sqrt(hyper.eta);
  sys.noisyX = true;
  sys.initialState = momentInitialState(f, noise, L, hyper.beta2);
  sys.coefficients = [f, noise, L, rho, eps, theta, ours](double, std::span<const double> st, std::span<double> b,
                                                           std::span<double> s) {
    const std::size_t d = L.d;
    Scratch& sc = scratch(d);
    const auto x = st.first(d);
    gradientInto(f, x, sc.g);
    const Vec cov = covarianceDiag(noise, f, x);
    for (std::size_t i = 0; i < d; ++i) {
      const double v = st[L.vOffset() + i];
      const double p = std::sqrt(v > 0.0 ? v : 0.0) + eps;
      b[i] = -sc.g[i] / p - theta * x[i];
      s[i] = std::sqrt(cov[i]) / p;
      const double target = (ours ? sc.g[i] * sc.g[i] : 0.0) + cov[i];
      b[L.vOffset() + i] = rho * (target - v);
      s[L.vOffset() + i] = 0.0;
    }
  };
  return sys;
}

SdeSystem buildAdamSde(const Landscape& f, const NoiseModel& noise, const OptimizerConfig& hyper, double theta,
                       SdeBaseline baseline, double dt) {
  if (!(hyper.beta1 >= 0.0 && hyper.beta1 < 1.0) || !(hyper.beta2 >= 0.0 && hyper.beta2 < 1.0))
    throw std::invalid_argument("Adam SDE: betas must lie in [0, 1)");
  if (!(hyper.eta > 0.0) || !(hyper.epsilon > 0.0)) throw std::invalid_argument("Adam SDE: eta and epsilon must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("Adam SDE: dt must be > 0");
  if (theta < 0.0) throw std::invalid_argument("Adam SDE: theta must be >= 0");
  if (!hasFiniteVariance(noise)) throw std::invalid_argument("Adam SDE: noise covariance is undefined");
  const std::size_t d = dimension(f);
  const StateLayout L{d, true, true};
  const double eta = hyper.eta;
  const double rho1 = (1.0 - hyper.beta1) / eta;
  const double rho2 = (1.0 - hyper.beta2) / eta;
  const double eps = hyper.epsilon;
  const bool ours = baseline == SdeBaseline::Ours;

  SdeSystem sys;
  sys.name = std::string(theta > 0.0 ? "adamw-" : "adam-") + toString(baseline);
  sys.stateDims = L;
  sys.sqrtEta = std::sqrt(eta);
  sys.noisyM = true;
  sys.initialState = momentInitialState(f, noise, L, hyper.beta2);
  sys.coefficients = [f, noise, L, eta, rho1, rho2, eps, theta, ours, dt](
                         double t, std::span<const double> st, std::span<double> b, std::span<double> s) {
    const std::size_t d = L.d;
    Scratch& sc = scratch(d);
    const auto x = st.first(d);
    gradientInto(f, x, sc.g);
    const Vec cov = covarianceDiag(noise, f, x);
    const double tc = t > dt ? t : dt;
    const double iota1 = -std::expm1(-rho1 * tc);
    const double iota2 = -std::expm1(-rho2 * tc);
    const double sq2 = std::sqrt(iota2);
    const double pref = sq2 / iota1;
    for (std::size_t i = 0; i < d; ++i) {
      const double m = st[L.mOffset() + i];
      const double v = st[L.vOffset() + i];
      const double p = std::sqrt(v > 0.0 ? v : 0.0) + eps * sq2;
      const double mEff = ours ? m + eta * rho1 * (sc.g[i] - m) : m;
      b[i] = -pref * mEff / p - theta * x[i];
      s[i] = 0.0;
      b[L.mOffset() + i] = rho1 * (sc.g[i] - m);
      s[L.mOffset() + i] = rho1 * std::sqrt(cov[i]);
      const double target = (ours ? sc.g[i] * sc.g[i] : 0.0) + cov[i];
      b[L.vOffset() + i] = rho2 * (target - v);
      s[L.vOffset() + i] = 0.0;
    }
  };
  return sys;
}

Trajectory eulerMaruyama(const SdeSystem& sys, const Vec& initialState, double dt, std::size_t nSteps, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("eulerMaruyama: dt must be > 0");
  if (initialState.size() != sys.stateDims.size())
    throw std::invalid_argument("eulerMaruyama: initial state size does not match the system layout");
  Trajectory tr;
  tr.times.reserve(nSteps + 1);
  tr.states.reserve(nSteps + 1);
  Vec state = initialState;
  tr.divergedAt = eulerMaruyamaVisit(
      sys, state, dt, nSteps, rng,
      [&](std::size_t, double t, const Vec& st) {
        tr.times.push_back(t);
        tr.states.push_back(st);
      },
      &tr.vFloorEvents);
  return tr;
}

Phase phaseOfY(double y) {
  const double a = std::abs(y);
  if (a >= 1.5) return Phase::Phase1;
  if (a > 1.0) return Phase::Phase2;
  return Phase::Phase3;
}

std::vector<Phase> phaseClassify(std::span<const double> x, const Landscape& f, const NoiseModel& noise) {
  if (!isGaussianFamily(noise)) throw std::invalid_argument("phaseClassify: Y is undefined for infinite-variance noise");
  const std::size_t d = x.size();
  const Vec g = gradient(f, x);
  Vec s(d);
  noiseScaleInto(noise, f, x, s);
  std::vector<Phase> out(d);
  for (std::size_t i = 0; i < d; ++i) {
    double y;
    if (s[i] > 0.0) y = g[i] / (std::numbers::sqrt2 * s[i]);
    else y = g[i] == 0.0 ? 0.0 : std::copysign(INFINITY, g[i]);
    out[i] = phaseOfY(y);
  }
  return out;
}

} // namespace sdelab
