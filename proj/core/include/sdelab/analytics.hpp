#pragma once

#include "sdelab/landscapes.hpp"
#include "sdelab/noise.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace sdelab {

struct PhaseConstants {
  double m = 0.0;     // secant slope of erf on [1, 3/2]
  double q1 = 0.0;    // secant intercept
  double q2 = 0.0;    // intercept of the tangent with slope m
  double qHat = 0.0;  // max(q1, q2)
  double xStar = 0.0; // tangency point
};

PhaseConstants phaseConstants();

enum class BoundForm { ExponentialToFloor, QuadraticStopping, LambertWEnvelope };

// Envelope curves. ExponentialToFloor: s0 e^{-rate t} + floor (1 - e^{-rate t}).
// QuadraticStopping: 1/4 (sqrt(mu) t - 2 sqrt(s0))^2 until tStar, 0 afterwards.
// LambertWEnvelope: beta^2 (W(((beta + sqrt(s0) alpha)/beta) exp(-(alpha^2 t - 2 sqrt(s0) alpha)/(2 beta) - 1)) + 1)^2 / alpha^2.
struct LossBoundCurve {
  BoundForm form = BoundForm::ExponentialToFloor;
  double s0 = 0.0;
  double rate = 0.0;
  double floor = 0.0;
  double mu = 0.0;
  double tStar = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool degenerate = false; // floor clamped at 0 or beta <= 0
  std::string note;

  double value(double t) const;
  double limit() const;
};

// phase in {1, 2, 3}; d is the dimension entering the phase-2 term mu d qHat^2.
LossBoundCurve signsgdLossBound(int phase, double mu, double lTau, double sigmaMax, double eta, double s0,
                                std::size_t d = 1);
// rate 2 mu kappa, floor (eta/2)(lTau sigma^2 / (2 mu B)) (kappa / delta).
LossBoundCurve sgdLossBound(double mu, double lTau, double sigmaMax, double eta, double s0, double kappa = 1.0,
                            double delta = 1.0, double batch = 1.0);
// Looser variant for PL + L-smooth objectives; phase in {2, 3}.
LossBoundCurve plSmoothLossBound(int phase, double mu, double L, std::size_t d, double sigmaMax, double eta,
                                 double s0);

struct AltNoiseParams {
  int phase = 3;
  double mu = 0.0;
  double L = 0.0;
  double lTau = 0.0;
  std::size_t d = 1;
  double sigma = 1.0;
  double eta = 1e-3;
  double s0 = 0.0;
  double batch = 1.0;
  double anchorLoss = 0.0; // frozen-hessian f(x*)
  double lambdaMax = 0.0;  // frozen-hessian largest eigenvalue of hess f(x*)
};

LossBoundCurve altNoiseLossBound(StateNoiseKind kind, const AltNoiseParams& p);

// Per-coordinate stationary law and transients for diagonal H and Sigma.
struct StationaryMoments {
  Vec mean;
  Vec cov;
  std::function<Vec(double)> transientMean;
  std::function<Vec(double)> transientCov;
};

// sigmas are per-coordinate standard deviations (Sigma^{1/2} diagonal).
StationaryMoments signsgdStationary(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0 = {});
StationaryMoments sgdStationary(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0 = {});

// Exact phase-3 expected loss E[X_t^T H X_t / 2] of the SignSGD SDE on a diagonal quadratic.
double signsgdQuadLossCurve(const Vec& lambdas, const Vec& sigmas, double eta, const Vec& x0, double t);

struct SchedulerVerdict {
  bool converges = false;
  double c = 0.0; // (lTau sigmaMax / (4 mu)) sqrt(pi / 2)
  double vartheta = 0.0;
  // c * eta * (k + 1)^(-vartheta): the limit of the bound for the update x -= eta eta_k sign(.)
  double envelope(double eta, std::uint64_t k) const;
};

SchedulerVerdict schedulerVerdict(double vartheta, double lTau = 0.0, double sigmaMax = 0.0, double mu = 1.0);

enum class AdaptiveFamily { Rmsprop, RmspropW, Adam, AdamW, AdamL2 };
AdaptiveFamily parseAdaptiveFamily(const std::string& name);

struct AdaptiveBoundParams {
  double mu = 0.0;
  double L = 0.0;
  double lTau = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  double batch = 1.0;
  double theta = 0.0; // decay for W families, l2 coefficient for adam-l2
  double kappa = 1.0;
  double delta = 1.0;
  double xi = 1.0;
};

double adaptiveAsymptoticLoss(AdaptiveFamily family, const AdaptiveBoundParams& p);
// Landscapes without mu (saddle) are refused.
double adaptiveAsymptoticLoss(AdaptiveFamily family, const Landscape& f, const AdaptiveBoundParams& p);

// Transients are the linearized OU curves around the stationary preconditioner.
StationaryMoments adaptiveStationary(AdaptiveFamily family, const Vec& lambdas, const Vec& sigmas, double eta,
                                     double theta, const Vec& x0 = {});

} // namespace sdelab
