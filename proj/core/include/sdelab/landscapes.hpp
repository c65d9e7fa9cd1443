#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace sdelab {

using Vec = std::vector<double>;

// f(x) = 1/2 sum_i lambda_i x_i^2, minimizer 0.
struct QuadraticDiag {
  Vec lambdas;
};

// f(x) = 1/2 x^T H x + quartic/4 sum x_i^4 - cubic/3 sum x_i^3 with H = diag(lambdas).
struct EmbeddedSaddle {
  Vec lambdas;
  double quartic = 1.0;
  double cubic = 0.0;
};

// f(theta) = 1/2 <D (W theta - b), W theta - b>, D = diag(j^(-2 alpha)).
// W is stored row-major, v rows by d columns.
struct PowerLawQuadratic {
  std::size_t v = 0;
  std::size_t d = 0;
  double alpha = 0.0;
  Vec designMatrix;
  Vec target;

  Vec spectrum() const;                              // D diagonal
  Vec residual(std::span<const double> theta) const; // phi = W theta - b
  // The optimized state is phi; in phi coordinates the landscape is diagonal.
  QuadraticDiag phiSpace() const;
};

using Landscape = std::variant<QuadraticDiag, EmbeddedSaddle, PowerLawQuadratic>;

struct CurvatureConstants {
  double mu = 0.0;
  double smoothness = 0.0;
  double traceBound = 0.0;
  bool hasMu = false;
  bool hasSmoothness = false;
  bool hasTraceBound = false;
};

QuadraticDiag makeQuadratic(Vec lambdas, bool convex = true);
EmbeddedSaddle makeSaddle(Vec lambdas, double quartic, double cubic);
// Gaussian design W_ij ~ N(0, 1/d) and target b_j ~ N(0, 1) from `seed`.
PowerLawQuadratic makePowerLaw(std::size_t v, std::size_t d, double alpha, std::uint64_t seed);

std::size_t dimension(const Landscape& f);
double evaluate(const Landscape& f, std::span<const double> x);
void gradientInto(const Landscape& f, std::span<const double> x, std::span<double> out);
Vec gradient(const Landscape& f, std::span<const double> x);
Vec hessianDiag(const Landscape& f, std::span<const double> x);
// PowerLawQuadratic reports constants of its phi-space form (mu = min D, L = max D, L_tau = Tr D).
CurvatureConstants constants(const Landscape& f);

} // namespace sdelab
