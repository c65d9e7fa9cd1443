#include "sdelab/analytics.hpp"

#include "sdelab/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdelab {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);

void requirePositive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be > 0");
}

LossBoundCurve exponentialCurve(double s0, double rate, double floor) {
  LossBoundCurve c;
  c.form = BoundForm::ExponentialToFloor;
  c.s0 = s0;
  c.rate = rate;
  c.floor = floor;
  if (c.floor < 0.0) {
    c.floor = 0.0;
    c.degenerate = true;
    c.note = "negative floor clamped at 0";
  }
  return c;
}

LossBoundCurve stoppingCurve(double mu, double s0) {
  LossBoundCurve c;
  c.form = BoundForm::QuadraticStopping;
  c.s0 = s0;
  c.mu = mu;
  c.tStar = 2.0 * std::sqrt(s0 / mu);
  return c;
}

LossBoundCurve lambertCurve(double alpha, double beta, double s0) {
  if (beta <= 0.0) {
    // dS <= -alpha sqrt(S) dt + beta dt with beta <= 0: bounded by the beta = 0 solution,
    // (sqrt(s0) - alpha t / 2)^2, i.e. quadratic stopping with mu = alpha^2 / 4.
    LossBoundCurve c = stoppingCurve(alpha * alpha / 4.0, s0);
    c.alpha = alpha;
    c.beta = beta;
    c.degenerate = true;
    c.note = "beta <= 0: floor 0";
    return c;
  }
  LossBoundCurve c;
  c.form = BoundForm::LambertWEnvelope;
  c.s0 = s0;
  c.alpha = alpha;
  c.beta = beta;
  c.floor = beta * beta / (alpha * alpha);
  c.rate = alpha * alpha / (2.0 * beta);
  return c;
}

} // namespace

PhaseConstants phaseConstants() {
  PhaseConstants pc;
  pc.m = (erf(1.5) - erf(1.0)) / 0.5;
  pc.q1 = erf(1.0) - pc.m;
  // (2/sqrt(pi)) exp(-x^2) = m, decreasing on [1, 1.5]
  auto h = [&](double x) { return 2.0 / std::sqrt(kPi) * std::exp(-x * x) - pc.m; };
  double lo = 1.0, hi = 1.5;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  pc.xStar = 0.5 * (lo + hi);
  pc.q2 = erf(pc.xStar) - pc.m * pc.xStar;
  pc.qHat = std::max(pc.q1, pc.q2);
  return pc;
}

double LossBoundCurve::value(double t) const {
  switch (form) {
  case BoundForm::ExponentialToFloor: {
    const double e = std::exp(-rate * t);
    return s0 * e + floor * (1.0 - e);
  }
  case BoundForm::QuadraticStopping: {
    if (t >= tStar) return 0.0;
    const double r = std::sqrt(mu) * t - 2.0 * std::sqrt(s0);
    return 0.25 * r * r;
  }
  case BoundForm::LambertWEnvelope: {
    const double rs = std::sqrt(s0) * alpha;
    const double logZ = std::log((beta + rs) / beta) - (alpha * alpha * t - 2.0 * rs) / (2.0 * beta) - 1.0;
    const double w = lambertW0FromLog(logZ);
    const double r = beta * (w + 1.0) / alpha;
    return r * r;
  }
  }
  return 0.0;
}

double LossBoundCurve::limit() const {
  return form == BoundForm::QuadraticStopping ? 0.0 : floor;
}

LossBoundCurve signsgdLossBound(int phase, double mu, double lTau, double sigmaMax, double eta, double s0,
                                std::size_t d) {
  requirePositive(mu, "mu");
  requirePositive(sigmaMax, "sigmaMax");
  if (phase == 1) return stoppingCurve(mu, s0);
  const PhaseConstants pc = phaseConstants();
  if (phase == 2) {
    const double delta = pc.m / (std::numbers::sqrt2 * sigmaMax) + eta * mu * pc.m * pc.m / (4.0 * sigmaMax * sigmaMax);
    const double floor = 0.5 * eta * (lTau - mu * static_cast<double>(d) * pc.qHat * pc.qHat) / (2.0 * mu * delta);
    return exponentialCurve(s0, 2.0 * mu * delta, floor);
  }
  if (phase == 3) {
    const double delta = kSqrt2OverPi / sigmaMax + eta / kPi * mu / (sigmaMax * sigmaMax);
    return exponentialCurve(s0, 2.0 * mu * delta, 0.5 * eta * lTau / (2.0 * mu * delta));
  }
  throw std::invalid_argument("signsgdLossBound: phase must be 1, 2 or 3");
}

LossBoundCurve sgdLossBound(double mu, double lTau, double sigmaMax, double eta, double s0, double kappa,
                            double delta, double batch) {
  requirePositive(mu, "mu");
  requirePositive(kappa, "kappa");
  requirePositive(delta, "delta");
  requirePositive(batch, "batch");
  const double floor = 0.5 * eta * (lTau * sigmaMax * sigmaMax / (2.0 * mu * batch)) * (kappa / delta);
  return exponentialCurve(s0, 2.0 * mu * kappa, floor);
}

LossBoundCurve plSmoothLossBound(int phase, double mu, double L, std::size_t d, double sigmaMax, double eta,
                                 double s0) {
  requirePositive(mu, "mu");
  requirePositive(L, "L");
  requirePositive(sigmaMax, "sigmaMax");
  double delta;
  if (phase == 2) delta = phaseConstants().m / (std::numbers::sqrt2 * sigmaMax);
  else if (phase == 3) delta = kSqrt2OverPi / sigmaMax;
  else throw std::invalid_argument("plSmoothLossBound: phase must be 2 or 3");
  return exponentialCurve(s0, 2.0 * mu * delta, eta * L * static_cast<double>(d) / (4.0 * mu * delta));
}

LossBoundCurve altNoiseLossBound(StateNoiseKind kind, const AltNoiseParams& p) {
  requirePositive(p.mu, "mu");
  if (p.phase == 1) return stoppingCurve(p.mu, p.s0);
  if (p.phase != 2 && p.phase != 3) throw std::invalid_argument("altNoiseLossBound: phase must be 1, 2 or 3");
  const PhaseConstants pc = phaseConstants();
  const double m = pc.m, mu = p.mu, eta = p.eta, dd = static_cast<double>(p.d);
  switch (kind) {
  case StateNoiseKind::FrozenHessian: {
    requirePositive(p.anchorLoss, "anchorLoss");
    requirePositive(p.lambdaMax, "lambdaMax");
    requirePositive(p.sigma, "sigma");
    const double s2 = p.anchorLoss * p.sigma * p.sigma * p.lambdaMax;
    if (p.phase == 2) {
      const double delta = m / (std::numbers::sqrt2 * std::sqrt(s2)) + eta * mu * m * m / (4.0 * s2);
      const double floor = 0.5 * eta * (p.lTau - mu * dd * pc.qHat * pc.qHat) / (2.0 * mu * delta);
      return exponentialCurve(p.s0, 2.0 * mu * delta, floor);
    }
    const double delta = kSqrt2OverPi / std::sqrt(s2) + eta / kPi * mu / s2;
    return exponentialCurve(p.s0, 2.0 * mu * delta, 0.5 * eta * p.lTau / (2.0 * mu * delta));
  }
  case StateNoiseKind::LossIsotropic:
  case StateNoiseKind::LossHessian: {
    requirePositive(p.sigma, "sigma");
    const double s2 = p.sigma * p.sigma * (kind == StateNoiseKind::LossHessian ? p.L : 1.0);
    if (kind == StateNoiseKind::LossHessian) requirePositive(p.L, "L");
    if (p.phase == 2) {
      const double beta = 0.5 * eta * (p.lTau - mu * dd * pc.qHat * pc.qHat - m * m * mu * mu / s2);
      const double alpha = std::numbers::sqrt2 * m * mu / std::sqrt(s2);
      return lambertCurve(alpha, beta, p.s0);
    }
    const double beta = eta * (p.lTau / 2.0 - 2.0 * mu * mu / (kPi * s2));
    const double alpha = 2.0 * kSqrt2OverPi * mu / std::sqrt(s2);
    return lambertCurve(alpha, beta, p.s0);
  }
  case StateNoiseKind::Regression: {
    requirePositive(p.L, "L");
    requirePositive(p.batch, "batch");
    const double beta = 0.5 * eta * p.lTau;
    const double alpha = p.phase == 2 ? m * mu * std::sqrt(p.batch) / std::sqrt(2.0 * p.L)
                                      : kSqrt2OverPi * mu * std::sqrt(p.batch) / std::sqrt(p.L);
    return lambertCurve(alpha, beta, p.s0);
  }
  }
  throw std::invalid_argument("altNoiseLossBound: unknown kind");
}

namespace {

void checkDiag(const Vec& lambdas, const Vec& sigmas) {
  if (lambdas.empty() || lambdas.size() != sigmas.size())
    throw std::invalid_argument("stationary: lambdas and sigmas must be non-empty and of equal length");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    requirePositive(lambdas[i], "lambda");
    requirePositive(sigmas[i], "sigma");
  }
}

Vec zerosIfEmpty(const Vec& x0, std::size_t d) {
  if (x0.empty()) return Vec(d, 0.0);
  if (x0.size() != d) throw std::invalid_argument("stationary: x0 dimension mismatch");
  return x0;
}

} // namespace

StationaryMoments signsgdStationary(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0in) {
  checkDiag(lambdas, sigmas);
  const std::size_t d = lambdas.size();
  const Vec x0 = zerosIfEmpty(x0in, d);
  StationaryMoments s;
  s.mean.assign(d, 0.0);
  s.cov.resize(d);
  Vec a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double l = lambdas[i], sg = sigmas[i];
    s.cov[i] = 0.5 * eta * sg / (l * (kSqrt2OverPi + eta / kPi * l / sg));
    a[i] = kSqrt2OverPi * l / sg;
    b[i] = a[i] + eta / kPi * l * l / (sg * sg);
  }
  s.transientMean = [a, x0](double t) {
    Vec m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = std::exp(-a[i] * t) * x0[i];
    return m;
  };
  s.transientCov = [a, b, x0, cov = s.cov](double t) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double mt = std::exp(-2.0 * b[i] * t);
      c[i] = (mt - std::exp(-2.0 * a[i] * t)) * x0[i] * x0[i] + cov[i] * (1.0 - mt);
    }
    return c;
  };
  return s;
}

StationaryMoments sgdStationary(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0in) {
  checkDiag(lambdas, sigmas);
  const std::size_t d = lambdas.size();
  const Vec x0 = zerosIfEmpty(x0in, d);
  StationaryMoments s;
  s.mean.assign(d, 0.0);
  s.cov.resize(d);
  for (std::size_t i = 0; i < d; ++i) s.cov[i] = 0.5 * eta * sigmas[i] * sigmas[i] / lambdas[i];
  s.transientMean = [lambdas, x0](double t) {
    Vec m(lambdas.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(-lambdas[i] * t) * x0[i];
    return m;
  };
  s.transientCov = [lambdas, cov = s.cov](double t) {
    Vec c(lambdas.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = cov[i] * -std::expm1(-2.0 * lambdas[i] * t);
    return c;
  };
  return s;
}

double signsgdQuadLossCurve(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0, double t) {
  checkDiag(lambdas, sigmas);
  if (x0.size() != lambdas.size()) throw std::invalid_argument("signsgdQuadLossCurve: x0 dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i], sg = sigmas[i];
    const double dd = kSqrt2OverPi / sg + l * eta / (kPi * sg * sg);
    const double e = std::exp(-2.0 * l * dd * t);
    acc += 0.5 * l * x0[i] * x0[i] * e + eta / (4.0 * dd) * (1.0 - e);
  }
  return acc;
}

double SchedulerVerdict::envelope(double eta, std::uint64_t k) const {
  return c * eta * std::pow(static_cast<double>(k) + 1.0, -vartheta);
}

SchedulerVerdict schedulerVerdict(double vartheta, double lTau, double sigmaMax, double mu) {
  if (vartheta < 0.0) throw std::invalid_argument("schedulerVerdict: vartheta must be >= 0");
  SchedulerVerdict v;
  v.vartheta = vartheta;
  v.converges = vartheta > 0.0 && vartheta <= 1.0;
  v.c = mu > 0.0 ? lTau * sigmaMax / (4.0 * mu) * std::sqrt(kPi / 2.0) : 0.0;
  return v;
}

AdaptiveFamily parseAdaptiveFamily(const std::string& name) {
  if (name == "rmsprop") return AdaptiveFamily::Rmsprop;
  if (name == "rmspropw") return AdaptiveFamily::RmspropW;
  if (name == "adam") return AdaptiveFamily::Adam;
  if (name == "adamw") return AdaptiveFamily::AdamW;
  if (name == "adam-l2") return AdaptiveFamily::AdamL2;
  throw std::invalid_argument("unknown adaptive family '" + name + "'");
}

double adaptiveAsymptoticLoss(AdaptiveFamily family, const AdaptiveBoundParams& p) {
  requirePositive(p.mu, "mu");
  requirePositive(p.L, "L");
  requirePositive(p.batch, "batch");
  requirePositive(p.delta, "delta");
  if (p.theta < 0.0) throw std::invalid_argument("theta must be >= 0");
  switch (family) {
  case AdaptiveFamily::Rmsprop:
  case AdaptiveFamily::Adam:
    return p.eta * p.sigma * p.lTau / (4.0 * p.mu * std::sqrt(p.batch)) * (p.kappa / std::sqrt(p.delta));
  case AdaptiveFamily::RmspropW:
  case AdaptiveFamily::AdamW:
    return 0.5 * p.eta * p.lTau * p.sigma * p.L * p.kappa /
           (2.0 * p.mu * std::sqrt(p.batch * p.delta) * p.L + p.sigma * p.xi * p.theta * (p.L + p.mu));
  case AdaptiveFamily::AdamL2:
    return 0.5 * p.eta * p.lTau * p.sigma * p.L / (2.0 * p.mu * p.L + p.theta * (p.L + p.mu));
  }
  throw std::invalid_argument("adaptiveAsymptoticLoss: unknown family");
}

double adaptiveAsymptoticLoss(AdaptiveFamily family, const Landscape& f, const AdaptiveBoundParams& p) {
  const CurvatureConstants c = constants(f);
  if (!c.hasMu || !c.hasSmoothness || !c.hasTraceBound)
    throw std::invalid_argument("adaptiveAsymptoticLoss: landscape has no strong-convexity constant");
  AdaptiveBoundParams q = p;
  q.mu = c.mu;
  q.L = c.smoothness;
  q.lTau = c.traceBound;
  return adaptiveAsymptoticLoss(family, q);
}

StationaryMoments adaptiveStationary(AdaptiveFamily family, const Vec& lambdas, const Vec& sigmas, double eta,
                                     double theta, const Vec& x0in) {
  checkDiag(lambdas, sigmas);
  if (theta < 0.0) throw std::invalid_argument("adaptiveStationary: theta must be >= 0");
  if (family == AdaptiveFamily::AdamL2) throw std::invalid_argument("adaptiveStationary: adam-l2 is not covered");
  const bool decoupled = family == AdaptiveFamily::RmspropW || family == AdaptiveFamily::AdamW;
  const double th = decoupled ? theta : 0.0;
  const std::size_t d = lambdas.size();
  const Vec x0 = zerosIfEmpty(x0in, d);
  StationaryMoments s;
  s.mean.assign(d, 0.0);
  s.cov.resize(d);
  Vec rate(d);
  for (std::size_t i = 0; i < d; ++i) {
    rate[i] = lambdas[i] / sigmas[i] + th;
    s.cov[i] = 0.5 * eta / rate[i];
  }
  s.transientMean = [rate, x0](double t) {
    Vec m(rate.size());
    for (std::size_t i = 0; i < rate.size(); ++i) m[i] = std::exp(-rate[i] * t) * x0[i];
    return m;
  };
  s.transientCov = [rate, cov = s.cov](double t) {
    Vec c(rate.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = cov[i] * -std::expm1(-2.0 * rate[i] * t);
    return c;
  };
  return s;
}

} // namespace sdelab
