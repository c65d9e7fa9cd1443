#include "sdelab/landscapes.hpp"

#include "sdelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdelab {

namespace {

void checkDim(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw std::invalid_argument("landscape dimension mismatch: expected " + std::to_string(expected) +
                                ", got " + std::to_string(got));
}

template <class... Ts> struct Overloaded : Ts... { using Ts::operator()...; };

} // namespace

Vec PowerLawQuadratic::spectrum() const {
  Vec out(v);
  for (std::size_t j = 0; j < v; ++j) out[j] = std::pow(static_cast<double>(j + 1), -2.0 * alpha);
  return out;
}

Vec PowerLawQuadratic::residual(std::span<const double> theta) const {
  checkDim(d, theta.size());
  Vec phi(v);
  for (std::size_t r = 0; r < v; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += designMatrix[r * d + c] * theta[c];
    phi[r] = acc - target[r];
  }
  return phi;
}

QuadraticDiag PowerLawQuadratic::phiSpace() const { return QuadraticDiag{spectrum()}; }

QuadraticDiag makeQuadratic(Vec lambdas, bool convex) {
  if (lambdas.empty()) throw std::invalid_argument("QuadraticDiag: dimension must be >= 1");
  for (double l : lambdas) {
    if (!std::isfinite(l)) throw std::invalid_argument("QuadraticDiag: non-finite lambda");
    if (convex && l <= 0.0) throw std::invalid_argument("QuadraticDiag: convex quadratic needs lambdas > 0");
  }
  return QuadraticDiag{std::move(lambdas)};
}

EmbeddedSaddle makeSaddle(Vec lambdas, double quartic, double cubic) {
  if (lambdas.empty()) throw std::invalid_argument("EmbeddedSaddle: dimension must be >= 1");
  if (!(quartic > 0.0)) throw std::invalid_argument("EmbeddedSaddle: quartic must be > 0");
  return EmbeddedSaddle{std::move(lambdas), quartic, cubic};
}

PowerLawQuadratic makePowerLaw(std::size_t v, std::size_t d, double alpha, std::uint64_t seed) {
  if (v == 0 || d == 0) throw std::invalid_argument("PowerLawQuadratic: v and d must be >= 1");
  if (alpha < 0.0) throw std::invalid_argument("PowerLawQuadratic: alpha must be >= 0");
  PowerLawQuadratic p;
  p.v = v;
  p.d = d;
  p.alpha = alpha;
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  p.designMatrix.resize(v * d);
  for (double& w : p.designMatrix) w = s * rng.normal();
  p.target.resize(v);
  for (double& b : p.target) b = rng.normal();
  return p;
}

std::size_t dimension(const Landscape& f) {
  return std::visit(Overloaded{
                        [](const QuadraticDiag& q) { return q.lambdas.size(); },
                        [](const EmbeddedSaddle& s) { return s.lambdas.size(); },
                        [](const PowerLawQuadratic& p) { return p.d; },
                    },
                    f);
}

double evaluate(const Landscape& f, std::span<const double> x) {
  return std::visit(
      Overloaded{
          [&](const QuadraticDiag& q) {
            checkDim(q.lambdas.size(), x.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) acc += q.lambdas[i] * x[i] * x[i];
            return 0.5 * acc;
          },
          [&](const EmbeddedSaddle& s) {
            checkDim(s.lambdas.size(), x.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              const double xi = x[i], x2 = xi * xi;
              acc += 0.5 * s.lambdas[i] * x2 + 0.25 * s.quartic * x2 * x2 - s.cubic / 3.0 * x2 * xi;
            }
            return acc;
          },
          [&](const PowerLawQuadratic& p) {
            const Vec phi = p.residual(x);
            const Vec dd = p.spectrum();
            double acc = 0.0;
            for (std::size_t j = 0; j < p.v; ++j) acc += dd[j] * phi[j] * phi[j];
            return 0.5 * acc;
          },
      },
      f);
}

void gradientInto(const Landscape& f, std::span<const double> x, std::span<double> out) {
  checkDim(x.size(), out.size());
  std::visit(Overloaded{
                 [&](const QuadraticDiag& q) {
                   checkDim(q.lambdas.size(), x.size());
                   for (std::size_t i = 0; i < x.size(); ++i) out[i] = q.lambdas[i] * x[i];
                 },
                 [&](const EmbeddedSaddle& s) {
                   checkDim(s.lambdas.size(), x.size());
                   for (std::size_t i = 0; i < x.size(); ++i) {
                     const double xi = x[i];
                     out[i] = s.lambdas[i] * xi + s.quartic * xi * xi * xi - s.cubic * xi * xi;
                   }
                 },
                 [&](const PowerLawQuadratic& p) {
                   Vec phi = p.residual(x);
                   const Vec dd = p.spectrum();
                   for (std::size_t j = 0; j < p.v; ++j) phi[j] *= dd[j];
                   for (std::size_t c = 0; c < p.d; ++c) {
                     double acc = 0.0;
                     for (std::size_t r = 0; r < p.v; ++r) acc += p.designMatrix[r * p.d + c] * phi[r];
                     out[c] = acc;
                   }
                 },
             },
             f);
}

Vec gradient(const Landscape& f, std::span<const double> x) {
  Vec out(x.size());
  gradientInto(f, x, out);
  return out;
}

Vec hessianDiag(const Landscape& f, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const QuadraticDiag& q) {
                          checkDim(q.lambdas.size(), x.size());
                          return q.lambdas;
                        },
                        [&](const EmbeddedSaddle& s) {
                          checkDim(s.lambdas.size(), x.size());
                          Vec h(x.size());
                          for (std::size_t i = 0; i < x.size(); ++i)
                            h[i] = s.lambdas[i] + 3.0 * s.quartic * x[i] * x[i] - 2.0 * s.cubic * x[i];
                          return h;
                        },
                        [&](const PowerLawQuadratic& p) {
                          checkDim(p.d, x.size());
                          const Vec dd = p.spectrum();
                          Vec h(p.d, 0.0);
                          for (std::size_t c = 0; c < p.d; ++c)
                            for (std::size_t r = 0; r < p.v; ++r) {
                              const double w = p.designMatrix[r * p.d + c];
                              h[c] += dd[r] * w * w;
                            }
                          return h;
                        },
                    },
                    f);
}

CurvatureConstants constants(const Landscape& f) {
  auto fromDiag = [](const Vec& l) {
    CurvatureConstants c;
    const auto [lo, hi] = std::minmax_element(l.begin(), l.end());
    c.smoothness = *hi;
    c.hasSmoothness = true;
    if (*lo > 0.0) {
      c.mu = *lo;
      c.hasMu = true;
      c.traceBound = std::accumulate(l.begin(), l.end(), 0.0);
      c.hasTraceBound = true;
    }
    return c;
  };
  return std::visit(Overloaded{
                        [&](const QuadraticDiag& q) { return fromDiag(q.lambdas); },
                        [](const EmbeddedSaddle&) { return CurvatureConstants{}; },
                        [&](const PowerLawQuadratic& p) { return fromDiag(p.spectrum()); },
                    },
                    f);
}

} // namespace sdelab
