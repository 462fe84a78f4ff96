#pragma once

#include <string>

namespace gassm {

// Outcome margin families.  The linear predictor eta is the identity link
// mean for Gaussian and the log-link mean for Gamma.  aux is the auxiliary
// parameter on the unconstrained (log) scale: log sigma for Gaussian,
// log shape for Gamma.  The selection margin is always standard normal and
// never carries an auxiliary parameter.
enum class MarginFamily { Gaussian, Gamma };

MarginFamily margin_from_string(const std::string& name);
std::string margin_name(MarginFamily f);

// Everything the sample-selection likelihood needs from the margin at one
// observation: log density, cdf, and their first/second derivatives in the
// linear predictor and in aux.
struct MarginEval {
  double logpdf = 0;
  double dlogpdf_deta = 0;
  double d2logpdf_deta2 = 0;
  double cdf = 0;
  double dcdf_deta = 0;
  double d2cdf_deta2 = 0;
  double dlogpdf_daux = 0;
  double d2logpdf_daux2 = 0;
  double d2logpdf_detadaux = 0;
  double dcdf_daux = 0;
  double d2cdf_daux2 = 0;
  double d2cdf_detadaux = 0;
};

MarginEval margin_eval(MarginFamily f, double y, double eta, double aux);

double margin_logpdf(MarginFamily f, double y, double eta, double aux);
double margin_cdf(MarginFamily f, double y, double eta, double aux);
// Inverse cdf; u strictly inside (0,1).
double margin_quantile(MarginFamily f, double u, double eta, double aux);
double margin_mean(MarginFamily f, double eta, double aux);

// Unit deviance -2(logpdf - saturated logpdf): ((y-eta)/sigma)^2 for
// Gaussian, 2k((y-mu)/mu - log(y/mu)) for Gamma.
double margin_deviance(MarginFamily f, double y, double eta, double aux);

}  // namespace gassm
