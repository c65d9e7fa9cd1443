#pragma once

namespace sdelab {

// Error function, (2/sqrt(pi)) * integral_0^x exp(-t^2) dt.
double erf(double x);

// Xi_nu(x) = F_nu(x) - 1/2 where F_nu is the Student-t distribution function.
// Closed forms for nu = 1, 2; other nu by Gauss-Kronrod quadrature
// (absolute tolerance 1e-10) after the substitution t = sqrt(nu) tan(theta).
double studentXi(int nu, double x);

// Student-t density at 0, i.e. Xi_nu'(0).
double studentDensityAtZero(int nu);

// Principal branch W0 on [-1/e, inf), Halley iteration.
// Initial guess: branch-point series for x < -0.25, log1p(x) up to e,
// log(x) - log(log(x)) beyond.
double lambertW0(double x);

// W0(exp(logZ)) without forming exp(logZ); stays finite for logZ well past
// the double overflow threshold.
double lambertW0FromLog(double logZ);

} // namespace sdelab
