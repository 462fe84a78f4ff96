#pragma once

#include <Eigen/Dense>

#include "gassm/data.hpp"
#include "gassm/glm.hpp"
#include "gassm/optimizer.hpp"

namespace gassm {

// Classical Gaussian sample selection estimators over linear model specs.
// Both equations use the raw covariate columns plus an intercept; smooth
// terms are rejected.

struct TwoStepFit {
  Eigen::VectorXd beta1;  // probit stage
  Eigen::VectorXd xi;     // inverse Mills ratios on selected rows
  Eigen::VectorXd beta2;  // second stage, without the Mills coefficient
  double gamma = 0.0;     // coefficient on xi; gamma = sigma * rho
  double sigma = 0.0;
  double rho_raw = 0.0;   // gamma / sigma, unrestricted
  double rho = 0.0;       // clamped to [-1, 1]
  Eigen::Index n_sel = 0;
  bool probit_converged = false;
  // False when every selection covariate also enters the outcome equation;
  // identification then rests on the nonlinearity of xi alone.
  bool has_exclusion = true;
};

// Probit first stage, then OLS of y2 on [x2, xi_hat] over selected rows.
// sigma_hat^2 = mean(resid^2) + mean(xi*(xi + eta1)); rho_hat = gamma/sigma.
TwoStepFit two_step(const Dataset& data, const ModelSpec& spec);

struct FimlFit {
  Eigen::VectorXd beta1;
  Eigen::VectorXd beta2;
  double sigma = 1.0;
  double rho = 0.0;
  double log_sigma = 0.0;
  double atanh_rho = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iters = 0;
  Eigen::MatrixXd cov;  // inverse observed information, FIML order
};

// Joint bivariate-normal selection likelihood
//   sum_{y1=0} log Phi(-eta1)
//   + sum_{y1=1} log Phi((eta1 + rho*t)/sqrt(1-rho^2)) + log phi(t) - log sigma,
// t = (y2 - eta2)/sigma, maximized over [beta1 | beta2 | log sigma | atanh rho]
// by the trust-region optimizer with an analytic gradient and a
// finite-difference Hessian.
FimlFit gaussian_fiml(const Dataset& data, const ModelSpec& spec,
                      const TrustRegionOpts& opts = {});

}  // namespace gassm
