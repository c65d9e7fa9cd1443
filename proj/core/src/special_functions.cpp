#include "sdelab/special_functions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdelab {

double erf(double x) { return std::erf(x); }

double studentDensityAtZero(int nu) {
  if (nu < 1) throw std::domain_error("studentDensityAtZero: nu must be >= 1");
  const double n = nu;
  return std::exp(std::lgamma((n + 1.0) / 2.0) - std::lgamma(n / 2.0)) /
         std::sqrt(n * std::numbers::pi);
}

double studentXi(int nu, double x) {
  if (nu < 1) throw std::domain_error("studentXi: nu must be >= 1");
  if (std::isnan(x)) return x;
  if (nu == 1) return std::atan(x) / std::numbers::pi;
  if (nu == 2) {
    if (std::isinf(x)) return x > 0 ? 0.5 : -0.5;
    return x / (2.0 * std::sqrt(2.0 + x * x));
  }
  const double n = nu;
  // density(t) dt = c * cos(theta)^(nu-1) dtheta with c = Gamma((nu+1)/2) / (sqrt(pi) Gamma(nu/2))
  const double c = std::exp(std::lgamma((n + 1.0) / 2.0) - std::lgamma(n / 2.0)) /
                   std::sqrt(std::numbers::pi);
  const double upper = std::atan(x / std::sqrt(n));
  auto integrand = [nu](double th) { return std::pow(std::cos(th), nu - 1); };
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, upper, 15, 1e-13, &err);
  return c * val;
}

double lambertW0(double x) {
  constexpr double kInvE = 0.36787944117144233;
  if (std::isnan(x)) return x;
  if (x < -kInvE) {
    if (x > -kInvE - 1e-15) return -1.0;
    throw std::domain_error("lambertW0: argument below -1/e");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;
  double w;
  if (x < -0.25) {
    const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x <= std::numbers::e) {
    w = std::log1p(x);
  } else {
    const double l = std::log(x);
    w = l - std::log(l);
  }
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double lambertW0FromLog(double logZ) {
  if (logZ < 600.0) return lambertW0(std::exp(logZ));
  // Newton on g(w) = w + log(w) - logZ, w > 1 in this range
  double w = logZ - std::log(logZ);
  for (int it = 0; it < 64; ++it) {
    const double g = w + std::log(w) - logZ;
    const double step = g / (1.0 + 1.0 / w);
    w -= step;
    if (std::abs(step) <= 1e-15 * w) break;
  }
  return w;
}

} // namespace sdelab
