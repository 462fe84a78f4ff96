#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gassm/data.hpp"
#include "gassm/likelihood.hpp"
#include "gassm/optimizer.hpp"
#include "gassm/splines.hpp"

namespace gassm {

// Centered smooth estimate on an evaluation grid with pointwise sandwich
// standard errors; band = fit +- 1.96 se.
struct SmoothCurve {
  std::string column;
  int eq = 1;  // 1 selection, 2 outcome
  Eigen::VectorXd x;
  Eigen::VectorXd fit;
  Eigen::VectorXd se;
  double edf = 0.0;
  double lambda = 0.0;
};

struct FittedModel {
  ModelSpec spec;
  std::vector<std::string> names;  // covariate order used when fitting
  DesignBlocks design;             // term layouts, reused for prediction

  Eigen::VectorXd full;  // [alpha | beta | theta_tilde | log aux]
  Eigen::VectorXd alpha, beta;
  double theta_tilde = 0.0;
  double theta = 0.0;
  double tau = 0.0;
  double aux = 1.0;  // natural scale: sigma or shape

  Eigen::VectorXd lambda;  // eq1 smooths then eq2 smooths
  Eigen::VectorXd edf;     // per smooth block, then the total
  Eigen::MatrixXd cov;     // sandwich over active coordinates
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double ubre = 0.0;
  double hess_ridge = 0.0;
  bool converged = false;
  bool inner_converged = false;
  int cycles = 0;
  int inner_iters = 0;
  Eigen::Index clamp_cdf = 0, clamp_z = 0;

  int active_dim() const;
  // Index of a full-layout coordinate inside the active covariance; -1 when
  // the coordinate is held fixed.
  int active_index(int full_idx) const;
};

struct StartValues {
  Eigen::VectorXd full;     // full layout
  Eigen::VectorXd lambda;   // from the separate single-equation fits
  bool probit_ok = true;
  bool glm_ok = true;
};

// Separate penalized probit (ridge 1e-6) for the selection coefficients, a
// penalized GLM on the selected rows for the outcome coefficients, a
// method-of-moments auxiliary parameter, and the family's
// independence-proximal dependence start.  Failed stages fall back to zero
// coefficients with the intercept at link(mean).
StartValues starting_values(const Dataset& data, const ModelSpec& spec,
                            const DesignBlocks& design);

FittedModel fit_model(const Dataset& data, const ModelSpec& spec,
                      const FitOpts& opts = {});

// Linear predictors for one covariate row (same design path as fitting).
void predict_eta(const FittedModel& m, const Eigen::RowVectorXd& xrow,
                 double& eta1, double& eta2);

// Sandwich variances of eta1/eta2 row by row on the fitting data.
void predictor_variance(const FittedModel& m, const Dataset& data,
                        Eigen::VectorXd& var_eta1, Eigen::VectorXd& var_eta2);

std::vector<SmoothCurve> smooth_curves(const FittedModel& m, int npoints = 200);

}  // namespace gassm
