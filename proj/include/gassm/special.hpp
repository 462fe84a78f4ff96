#pragma once

#include <functional>
#include <vector>

// Scalar special functions and quadrature used across the package.
// Everything here is pure and thread-safe.

namespace gassm {

// Standard normal density, cdf, log cdf, quantile.
double norm_pdf(double x);
double norm_cdf(double x);
// Accurate for x down to about -3e8 (asymptotic Mills ratio in the far tail).
double norm_logcdf(double x);
// Inverse Mills ratio pdf/cdf, stable for arbitrarily negative u.
double inv_mills(double u);
// Inverse cdf; p must lie strictly in (0,1).
double norm_quantile(double p);

// Digamma and trigamma for x > 0.
double digamma(double x);
double trigamma(double x);

// Regularized lower incomplete gamma P(a,x), a > 0, x >= 0.
double pgamma(double a, double x);
// dP/dx = x^{a-1} e^{-x} / Gamma(a).
double pgamma_dx(double a, double x);
// First and second derivatives of P with respect to the shape a.
struct PgammaShapeDerivs {
  double da = 0.0;
  double daa = 0.0;
};
PgammaShapeDerivs pgamma_shape_derivs(double a, double x);
// Solves P(a,x) = p for x; p strictly in (0,1).
double qgamma(double a, double p);

// Bivariate standard normal cdf P(X <= h, Y <= k) with correlation rho.
double bvn_cdf(double h, double k, double rho);
// Bivariate standard normal density at (x, y).
double bvn_pdf(double x, double y, double rho);

// Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
double debye1(double x);

// Gauss-Legendre nodes/weights on [-1,1], generated by Newton iteration.
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};
GaussLegendre gauss_legendre(int n);

// Adaptive quadrature of f over [a,b] (7/15 point Gauss pair, bisection).
// tol is an absolute tolerance on the result.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10);

}  // namespace gassm
