#pragma once

#include "sdelab/landscapes.hpp"
#include "sdelab/rng.hpp"

#include <span>
#include <string>
#include <variant>

namespace sdelab {

// Z ~ N(0, diag(sigmas^2) / batch).
struct GaussianDiagNoise {
  Vec sigmas;
  double batch = 1.0;
};

// Z_i = scale_i / sqrt(batch) * t_nu.
struct StudentTNoise {
  int nu = 2;
  Vec scale;
  double batch = 1.0;
};

enum class StateNoiseKind { FrozenHessian, LossIsotropic, LossHessian, Regression };

// frozen-hessian:  Sigma = sigma^2 f(x*) diag(hess f(x*))
// loss-isotropic:  Sigma = sigma^2 f(x) I
// loss-hessian:    Sigma = sigma^2 f(x) diag(hess f(x))
// regression:      B Sigma = 2 f(phi) D + grad f grad f^T   (sigma unused; state is phi)
// All kinds are divided by `batch`.
struct StateScaledNoise {
  StateNoiseKind kind = StateNoiseKind::LossIsotropic;
  double sigma = 1.0;
  double batch = 1.0;
  Vec anchor;
  double anchorLoss = 0.0;
  Vec anchorHessian;
};

using NoiseModel = std::variant<GaussianDiagNoise, StudentTNoise, StateScaledNoise>;

GaussianDiagNoise makeGaussianNoise(Vec sigmas, double batch = 1.0);
StudentTNoise makeStudentNoise(int nu, Vec scale, double batch = 1.0);
// For frozen-hessian the anchor x* is required; anchorLoss <= 0 means "use f(x*)".
StateScaledNoise makeStateNoise(StateNoiseKind kind, double sigma, const Landscape& f, Vec anchor = {},
                                double anchorLoss = 0.0, double batch = 1.0);

StateNoiseKind parseStateNoiseKind(const std::string& name);
std::string toString(StateNoiseKind kind);

bool isGaussianFamily(const NoiseModel& noise);
bool hasFiniteVariance(const NoiseModel& noise);

// One draw of Z(x) into `out`.
void sampleInto(const NoiseModel& noise, const Landscape& f, std::span<const double> x, Rng& rng,
                std::span<double> out);
Vec sample(const NoiseModel& noise, const Landscape& f, std::span<const double> x, Rng& rng);

// Diagonal of Sigma(x). Student with nu <= 2 throws (infinite variance).
Vec covarianceDiag(const NoiseModel& noise, const Landscape& f, std::span<const double> x);
// Full Sigma(x), row-major d x d.
Vec covarianceFull(const NoiseModel& noise, const Landscape& f, std::span<const double> x);

// Per-coordinate scale entering the sign-drift closed forms: sqrt(Sigma_ii(x)) for the
// Gaussian family, scale_i / sqrt(batch) for Student.
void noiseScaleInto(const NoiseModel& noise, const Landscape& f, std::span<const double> x,
                    std::span<double> out);

// 1 - 2 P(g + Z_i < 0). Gaussian family: erf(g / (sqrt(2) s)); Student: 2 Xi_nu(g / s).
double signDrift(const NoiseModel& noise, double g, double s);
// sqrt(1 - signDrift^2).
double signDiffusion(const NoiseModel& noise, double g, double s);
// Small-signal slope of signDrift in g/s: sqrt(2/pi) for Gaussian, 2 t_nu(0) for Student.
double signDriftSlope(const NoiseModel& noise);

} // namespace sdelab
