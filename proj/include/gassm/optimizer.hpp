#pragma once

#include <Eigen/Dense>

#include "gassm/likelihood.hpp"

namespace gassm {

struct TrustRegionOpts {
  int max_iter = 200;
  double tol_f = 1e-9;   // relative penalized-loglik change
  double tol_g = 1e-6;   // penalized gradient sup-norm
  double radius0 = 1.0;
  double radius_max = 1e3;
};

struct TrustRegionResult {
  Eigen::VectorXd x;
  double value = 0.0;  // penalized log-likelihood at x
  int iters = 0;
  int rejected = 0;
  bool converged = false;
  ObjectiveEval eval;  // penalized, with Hessian, at x
};

// Maximizes value(x) - 0.5 sum lambda_j x'S_j x by a trust region with the
// exact eigendecomposition subproblem.  Accepted steps never decrease the
// objective; non-finite trial points are rejected.
TrustRegionResult trust_region_fit(const PenalizedObjective& obj,
                                   const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lambda,
                                   const TrustRegionOpts& opts = {});

// Frozen quantities for smoothing-parameter selection at the current
// estimate: I = ridge-repaired negative unpenalized Hessian, its symmetric
// square root and inverse root, and the working response z.
struct UbreWork {
  Eigen::MatrixXd I;
  Eigen::MatrixXd sqrtI;
  Eigen::MatrixXd sqrtIinv;
  Eigen::VectorXd z;
  double ridge = 0.0;
  double n_tilde = 0.0;  // constant offset in the criterion
};

// ev must hold the unpenalized gradient and Hessian at x.
UbreWork ubre_prepare(const ObjectiveEval& ev, const Eigen::VectorXd& x,
                      double n_tilde);

// V(lambda) = ||z - A z||^2 - n_tilde + 2 tr(A), A = sqrtI (I+S)^-1 sqrtI.
double ubre_value(const UbreWork& w, const PenalizedObjective& obj,
                  const Eigen::VectorXd& lambda);

// Minimizes V over lambda in [1e-8, 1e8]^q: BFGS on log lambda with a
// per-coordinate golden-section fallback.
Eigen::VectorXd select_lambda(const UbreWork& w, const PenalizedObjective& obj,
                              const Eigen::VectorXd& lambda0);

// Effective degrees of freedom tr[(I+S)^-1 I]: per penalty block and, in the
// last entry, the total over all coordinates.
Eigen::VectorXd edf_by_block(const UbreWork& w, const PenalizedObjective& obj,
                             const Eigen::VectorXd& lambda);

struct FitOpts {
  TrustRegionOpts tr;
  int max_cycles = 30;
  double lambda_tol = 1e-3;  // relative lambda change between cycles
  double delta_tol = 1e-6;   // relative coefficient change between cycles
  bool expected_info = false;  // SelectionLik only
  double n_tilde = 0.0;        // 0 = set from objective kind by caller
};

struct FitResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  bool converged = false;
  bool inner_converged = false;
  int cycles = 0;
  int inner_iters = 0;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double ubre = 0.0;
  double hess_ridge = 0.0;
  Eigen::VectorXd edf;       // per block + total
  Eigen::MatrixXd cov;       // sandwich (-Hp)^-1 (-H) (-Hp)^-1
  ObjectiveEval final_eval;  // penalized, with Hessian
};

// Performance iteration: alternate the inner trust-region fit with UBRE
// selection of lambda until both stabilize.  expected_info requires obj to
// be a SelectionLik.
FitResult fit_penalized(const PenalizedObjective& obj,
                        const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& lambda0, double n_tilde,
                        const FitOpts& opts = {});

}  // namespace gassm
