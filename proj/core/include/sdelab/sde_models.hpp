#pragma once

#include "sdelab/landscapes.hpp"
#include "sdelab/noise.hpp"
#include "sdelab/optimizers.hpp"
#include "sdelab/rng.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdelab {

// Augmented state laid out as [X | M | V], M and V present only when used.
struct StateLayout {
  std::size_t d = 0;
  bool hasM = false;
  bool hasV = false;

  std::size_t size() const { return d * (1 + (hasM ? 1 : 0) + (hasV ? 1 : 0)); }
  std::size_t mOffset() const { return d; }
  std::size_t vOffset() const { return hasM ? 2 * d : d; }
};

struct SdeSystem {
  using Coefficients = std::function<void(double t, std::span<const double> state, std::span<double> drift,
                                          std::span<double> diffusion)>;

  std::string name;
  StateLayout stateDims;
  // Fills drift and per-coordinate diffusion amplitude (before sqrtEta) in one pass.
  Coefficients coefficients;
  double sqrtEta = 0.0;
  bool noisyX = false;
  bool noisyM = false;
  // Augmented initial state built from x0.
  std::function<Vec(std::span<const double> x0)> initialState;

  Vec drift(double t, std::span<const double> state) const;
  Vec diffusionDiag(double t, std::span<const double> state) const;
};

struct Trajectory {
  Vec times;
  std::vector<Vec> states;
  std::optional<std::size_t> divergedAt;
  std::size_t vFloorEvents = 0;
};

enum class SignSgdVariant { Full, Erf, Phase1Ode, Phase3, Student };
enum class SdeBaseline { Ours, Malladi };
enum class Phase { Phase1 = 1, Phase2 = 2, Phase3 = 3 };

SignSgdVariant parseSignSgdVariant(const std::string& name);
std::string toString(SignSgdVariant v);
SdeBaseline parseBaseline(const std::string& name);
std::string toString(SdeBaseline b);

// drift = -eta_t * signDrift(grad f), diffusion = eta_t * signDiffusion, with eta_t the
// power-law scheduler evaluated at step index t / eta (1 when schedulerExponent == 0).
SdeSystem buildSignSgdSde(const Landscape& f, const NoiseModel& noise, SignSgdVariant variant, double eta,
                          double schedulerExponent = 0.0);
// drift = -kappa grad f, diffusion amplitude = kappa sqrt(Sigma_ii(x)); Sigma already carries 1/B.
SdeSystem buildSgdSde(const Landscape& f, const NoiseModel& noise, double kappa, double eta);
// Uses hyper.eta, hyper.beta2 (as beta) and hyper.epsilon.
SdeSystem buildRmspropSde(const Landscape& f, const NoiseModel& noise, const OptimizerConfig& hyper,
                          double decoupledTheta, SdeBaseline baseline);
// Uses hyper.eta, beta1, beta2, epsilon; iota_i(t) is evaluated at max(t, dt).
SdeSystem buildAdamSde(const Landscape& f, const NoiseModel& noise, const OptimizerConfig& hyper,
                       double decoupledTheta, SdeBaseline baseline, double dt);

// Divergence: any non-finite component, or ||X|| > 1e12.
constexpr double kDivergenceNorm = 1e12;

// Streams an Euler-Maruyama path: observer(k, t_k, state) for k = 0..nSteps.
// Returns the step index at which divergence was detected, if any.
template <class Observer>
std::optional<std::size_t> eulerMaruyamaVisit(const SdeSystem& sys, Vec& state, double dt, std::size_t nSteps,
                                              Rng& rng, Observer&& observer, std::size_t* vFloorEvents = nullptr) {
  const StateLayout& L = sys.stateDims;
  const std::size_t n = L.size();
  Vec b(n), s(n);
  const double sdt = std::sqrt(dt) * sys.sqrtEta;
  observer(std::size_t{0}, 0.0, std::as_const(state));
  for (std::size_t k = 0; k < nSteps; ++k) {
    const double t = static_cast<double>(k) * dt;
    sys.coefficients(t, state, b, s);
    for (std::size_t i = 0; i < n; ++i) state[i] += dt * b[i];
    if (sys.noisyX)
      for (std::size_t i = 0; i < L.d; ++i) state[i] += sdt * s[i] * rng.normal();
    if (sys.noisyM && L.hasM)
      for (std::size_t i = L.mOffset(); i < L.mOffset() + L.d; ++i) state[i] += sdt * s[i] * rng.normal();
    if (L.hasV)
      for (std::size_t i = L.vOffset(); i < L.vOffset() + L.d; ++i)
        if (state[i] < 0.0) {
          state[i] = 0.0;
          if (vFloorEvents) ++*vFloorEvents;
        }
    double norm2 = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(state[i])) finite = false;
      if (i < L.d) norm2 += state[i] * state[i];
    }
    if (!finite || norm2 > kDivergenceNorm * kDivergenceNorm) return k + 1;
    observer(k + 1, static_cast<double>(k + 1) * dt, std::as_const(state));
  }
  return std::nullopt;
}

Trajectory eulerMaruyama(const SdeSystem& sys, const Vec& initialState, double dt, std::size_t nSteps, Rng& rng);

// Per-coordinate phase from |Y_i|, Y = Sigma^{-1/2} grad f / sqrt(2).
// |Y| >= 3/2 -> Phase1, 1 < |Y| < 3/2 -> Phase2, |Y| <= 1 -> Phase3.
std::vector<Phase> phaseClassify(std::span<const double> x, const Landscape& f, const NoiseModel& noise);
Phase phaseOfY(double y);

} // namespace sdelab
