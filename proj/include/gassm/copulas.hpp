#pragma once

#include <string>
#include <utility>

#include "gassm/rng.hpp"

namespace gassm {

enum class CopulaTag { Normal, Clayton, Joe, Frank, Gumbel, AMH };

CopulaTag copula_from_string(const std::string& name);
std::string copula_name(CopulaTag tag);

// Dependence parameter on its natural scale.  Admissible ranges:
//   Normal rho in (-1,1), Clayton theta in (0,inf), Joe in (1,inf),
//   Frank in R\{0}, Gumbel in [1,inf), AMH in [-1,1].
struct CopulaFamily {
  CopulaTag tag = CopulaTag::Frank;
  double theta = 1.0;
};

// Throws std::domain_error when theta is outside the family's range.
void check_theta(const CopulaFamily& fam);

// C(u,v) for u,v in [0,1].
double copula_cdf(const CopulaFamily& fam, double u, double v);

// Partial derivatives of C at an interior point.  Notation: dv = dC/dv,
// duv = d2C/dudv (the density), dtheta_dv = d2C/(dtheta dv), and so on.
struct CopulaDerivs {
  double c = 0;       // C(u,v)
  double du = 0;      // conditional cdf of V given U (as a function of u-section)
  double dv = 0;
  double duv = 0;
  double dvv = 0;
  double duuv = 0;
  double duvv = 0;
  double dvvv = 0;
  double dtheta = 0;
  double dtheta_dv = 0;
  double dtheta_duv = 0;
  double dtheta_dvv = 0;
  double dtheta2_dv = 0;
};
CopulaDerivs copula_derivs(const CopulaFamily& fam, double u, double v);

// Archimedean generator phi(t) and the partial derivatives used to assemble
// copula derivatives: d1..d3 in t, dth in theta, and mixed ones.
struct GenPartials {
  double g = 0;
  double g1 = 0;
  double g2 = 0;
  double g3 = 0;
  double gth = 0;
  double g1th = 0;
  double g2th = 0;
  double gthth = 0;
  double g1thth = 0;
};
// Only for the five Archimedean families.
GenPartials generator_partials(const CopulaFamily& fam, double t);
double generator(const CopulaFamily& fam, double t);
double generator_inverse(const CopulaFamily& fam, double w);

// Kendall's tau.  Closed form for Normal, Clayton, Gumbel, Frank; numeric
// generator integral tau = 1 + 4 int phi/phi' for Joe and AMH.
double kendall_tau(const CopulaFamily& fam);
// Numeric generator integral for any Archimedean family (test cross-check).
double kendall_tau_numeric(const CopulaFamily& fam);
// Inverts tau -> theta; throws std::domain_error outside the attainable range.
double tau_to_theta(CopulaTag tag, double tau);

// Unconstrained parametrisation used by the optimizer,
//   Normal/AMH: theta = tanh(t); Clayton: exp(t); Joe/Gumbel: 1 + exp(t);
//   Frank: identity with the zero puncture snapped to +-1e-6.
double theta_to_unconstrained(CopulaTag tag, double theta);
double theta_from_unconstrained(CopulaTag tag, double t);
// First and second derivative of theta with respect to t.
std::pair<double, double> theta_link_derivs(CopulaTag tag, double t);
// Starting point near independence within the family.
double theta_start(CopulaTag tag);

// Conditional cdf P(V <= v | U = u) and its inverse in v.
double conditional_cdf(const CopulaFamily& fam, double u, double v);
double conditional_quantile(const CopulaFamily& fam, double u, double p);

// One pair from the copula by the conditional distribution method.
std::pair<double, double> copula_sample(const CopulaFamily& fam, Rng& rng);
// Gumbel only: Marshall-Olkin positive stable frailty route.
std::pair<double, double> gumbel_sample_frailty(double theta, Rng& rng);

}  // namespace gassm
