#include "sdelab/noise.hpp"

#include "sdelab/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdelab {

namespace {

template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };

void checkBatch(double batch) {
  if (!(batch >= 1.0)) throw std::invalid_argument("noise: batch must be >= 1");
}

double lossNonNegative(const Landscape& f, std::span<const double> x) {
  const double fx = evaluate(f, x);
  if (fx < 0.0) throw std::domain_error("state-scaled noise: f(x) < 0, covariance not PSD");
  return fx;
}

// Diagonal of Sigma(x) for state-scaled kinds (regression includes the g_i^2 term).
void stateDiagInto(const StateScaledNoise& n, const Landscape& f, std::span<const double> x,
                   std::span<double> out) {
  const std::size_t d = x.size();
  const double s2 = n.sigma * n.sigma / n.batch;
  switch (n.kind) {
  case StateNoiseKind::FrozenHessian:
    for (std::size_t i = 0; i < d; ++i) out[i] = s2 * n.anchorLoss * n.anchorHessian[i];
    return;
  case StateNoiseKind::LossIsotropic: {
    const double fx = lossNonNegative(f, x);
    for (std::size_t i = 0; i < d; ++i) out[i] = s2 * fx;
    return;
  }
  case StateNoiseKind::LossHessian: {
    const double fx = lossNonNegative(f, x);
    const Vec h = hessianDiag(f, x);
    for (std::size_t i = 0; i < d; ++i) {
      if (h[i] < 0.0) throw std::domain_error("loss-hessian noise: negative curvature, covariance not PSD");
      out[i] = s2 * fx * h[i];
    }
    return;
  }
  case StateNoiseKind::Regression: {
    const double fx = lossNonNegative(f, x);
    const Vec h = hessianDiag(f, x);
    const Vec g = gradient(f, x);
    for (std::size_t i = 0; i < d; ++i) out[i] = (2.0 * fx * h[i] + g[i] * g[i]) / n.batch;
    return;
  }
  }
}

} // namespace

GaussianDiagNoise makeGaussianNoise(Vec sigmas, double batch) {
  if (sigmas.empty()) throw std::invalid_argument("GaussianDiagNoise: empty sigmas");
  for (double s : sigmas)
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("GaussianDiagNoise: sigmas must be > 0");
  checkBatch(batch);
  return GaussianDiagNoise{std::move(sigmas), batch};
}

StudentTNoise makeStudentNoise(int nu, Vec scale, double batch) {
  if (nu < 1) throw std::invalid_argument("StudentTNoise: nu must be >= 1");
  if (scale.empty()) throw std::invalid_argument("StudentTNoise: empty scale");
  for (double s : scale)
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("StudentTNoise: scale must be > 0");
  checkBatch(batch);
  return StudentTNoise{nu, std::move(scale), batch};
}

StateScaledNoise makeStateNoise(StateNoiseKind kind, double sigma, const Landscape& f, Vec anchor,
                                double anchorLoss, double batch) {
  if (!(sigma > 0.0)) throw std::invalid_argument("StateScaledNoise: sigma must be > 0");
  checkBatch(batch);
  StateScaledNoise n;
  n.kind = kind;
  n.sigma = sigma;
  n.batch = batch;
  if (kind == StateNoiseKind::Regression && !std::holds_alternative<QuadraticDiag>(f))
    throw std::invalid_argument("regression noise: landscape must be the phi-space quadratic");
  if (kind == StateNoiseKind::FrozenHessian) {
    if (anchor.size() != dimension(f))
      throw std::invalid_argument("frozen-hessian noise: anchor x* with landscape dimension required");
    n.anchorHessian = hessianDiag(f, anchor);
    for (double h : n.anchorHessian)
      if (h < 0.0) throw std::domain_error("frozen-hessian noise: negative curvature at anchor");
    n.anchorLoss = anchorLoss > 0.0 ? anchorLoss : evaluate(f, anchor);
    if (!(n.anchorLoss > 0.0)) throw std::domain_error("frozen-hessian noise: f(x*) must be > 0");
    n.anchor = std::move(anchor);
  }
  return n;
}

StateNoiseKind parseStateNoiseKind(const std::string& name) {
  if (name == "frozen-hessian") return StateNoiseKind::FrozenHessian;
  if (name == "loss-isotropic") return StateNoiseKind::LossIsotropic;
  if (name == "loss-hessian") return StateNoiseKind::LossHessian;
  if (name == "regression") return StateNoiseKind::Regression;
  throw std::invalid_argument("unknown state noise kind '" + name + "'");
}

std::string toString(StateNoiseKind kind) {
  switch (kind) {
  case StateNoiseKind::FrozenHessian: return "frozen-hessian";
  case StateNoiseKind::LossIsotropic: return "loss-isotropic";
  case StateNoiseKind::LossHessian: return "loss-hessian";
  case StateNoiseKind::Regression: return "regression";
  }
  return "?";
}

bool isGaussianFamily(const NoiseModel& noise) { return !std::holds_alternative<StudentTNoise>(noise); }

bool hasFiniteVariance(const NoiseModel& noise) {
  if (const auto* t = std::get_if<StudentTNoise>(&noise)) return t->nu > 2;
  return true;
}

void sampleInto(const NoiseModel& noise, const Landscape& f, std::span<const double> x, Rng& rng,
                std::span<double> out) {
  std::visit(Overloaded{
                 [&](const GaussianDiagNoise& n) {
                   const double inv = 1.0 / std::sqrt(n.batch);
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.sigmas[i] * inv * rng.normal();
                 },
                 [&](const StudentTNoise& n) {
                   const double inv = 1.0 / std::sqrt(n.batch);
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.scale[i] * inv * rng.studentT(n.nu);
                 },
                 [&](const StateScaledNoise& n) {
                   if (n.kind == StateNoiseKind::Regression) {
                     // Z = sqrt(2 f D / B) xi + g zeta / sqrt(B) has covariance (2 f D + g g^T) / B exactly
                     const double fx = lossNonNegative(f, x);
                     const Vec h = hessianDiag(f, x);
                     const Vec g = gradient(f, x);
                     const double inv = 1.0 / std::sqrt(n.batch);
                     for (std::size_t i = 0; i < out.size(); ++i)
                       out[i] = std::sqrt(2.0 * fx * h[i]) * inv * rng.normal();
                     const double zeta = rng.normal();
                     for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i] * inv * zeta;
                     return;
                   }
                   stateDiagInto(n, f, x, out);
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]) * rng.normal();
                 },
             },
             noise);
}

Vec sample(const NoiseModel& noise, const Landscape& f, std::span<const double> x, Rng& rng) {
  Vec out(x.size());
  sampleInto(noise, f, x, rng, out);
  return out;
}

Vec covarianceDiag(const NoiseModel& noise, const Landscape& f, std::span<const double> x) {
  Vec out(x.size());
  std::visit(Overloaded{
                 [&](const GaussianDiagNoise& n) {
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.sigmas[i] * n.sigmas[i] / n.batch;
                 },
                 [&](const StudentTNoise& n) {
                   if (n.nu <= 2) throw std::domain_error("Student-t noise with nu <= 2 has infinite variance");
                   const double k = static_cast<double>(n.nu) / (n.nu - 2.0) / n.batch;
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * n.scale[i] * n.scale[i];
                 },
                 [&](const StateScaledNoise& n) { stateDiagInto(n, f, x, out); },
             },
             noise);
  return out;
}

Vec covarianceFull(const NoiseModel& noise, const Landscape& f, std::span<const double> x) {
  const std::size_t d = x.size();
  const Vec diag = covarianceDiag(noise, f, x);
  Vec full(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) full[i * d + i] = diag[i];
  if (const auto* n = std::get_if<StateScaledNoise>(&noise); n && n->kind == StateNoiseKind::Regression) {
    const Vec g = gradient(f, x);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) full[i * d + j] = g[i] * g[j] / n->batch;
  }
  return full;
}

void noiseScaleInto(const NoiseModel& noise, const Landscape& f, std::span<const double> x,
                    std::span<double> out) {
  std::visit(Overloaded{
                 [&](const GaussianDiagNoise& n) {
                   const double inv = 1.0 / std::sqrt(n.batch);
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.sigmas[i] * inv;
                 },
                 [&](const StudentTNoise& n) {
                   const double inv = 1.0 / std::sqrt(n.batch);
                   for (std::size_t i = 0; i < out.size(); ++i) out[i] = n.scale[i] * inv;
                 },
                 [&](const StateScaledNoise& n) {
                   stateDiagInto(n, f, x, out);
                   for (double& v : out) v = std::sqrt(v);
                 },
             },
             noise);
}

double signDrift(const NoiseModel& noise, double g, double s) {
  if (s == 0.0) return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
  if (const auto* t = std::get_if<StudentTNoise>(&noise)) return 2.0 * studentXi(t->nu, g / s);
  return erf(g / (std::numbers::sqrt2 * s));
}

double signDiffusion(const NoiseModel& noise, double g, double s) {
  if (s != 0.0 && !std::holds_alternative<StudentTNoise>(noise)) {
    // 1 - erf^2 = erfc (2 - erfc), no cancellation in the tails
    const double c = std::erfc(std::abs(g) / (std::numbers::sqrt2 * s));
    return std::sqrt(c * (2.0 - c));
  }
  const double dr = signDrift(noise, g, s);
  const double r = 1.0 - dr * dr;
  return r > 0.0 ? std::sqrt(r) : 0.0;
}

double signDriftSlope(const NoiseModel& noise) {
  if (const auto* t = std::get_if<StudentTNoise>(&noise)) return 2.0 * studentDensityAtZero(t->nu);
  return std::sqrt(2.0 / std::numbers::pi);
}

} // namespace sdelab
