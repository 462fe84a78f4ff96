#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gassm/data.hpp"
#include "gassm/model.hpp"

namespace gassm {

// Two bundled data-generating processes.
//   Consistency: additive selection and outcome equations with smooth effects,
//     gamma outcome (shape 2) linked by a Gumbel copula (theta = 3 default).
//   Logged: linear equations, gamma outcome, used to contrast a gamma fit with
//     a Gaussian fit on log outcomes across Normal/Frank/Clayton copulas.
enum class StudyKind { Consistency, Logged };

StudyKind study_from_string(const std::string& name);
std::string study_name(StudyKind k);

struct DGPSpec {
  StudyKind which = StudyKind::Consistency;
  Eigen::Index n = 1000;
  CopulaFamily copula{CopulaTag::Gumbel, 3.0};
  std::uint64_t seed = 1;
  // Added to the selection predictor; a large value makes every row selected
  // (fully observed draw of the same outcome law, used for test sets).
  double sel_shift = 0.0;

  // Consistency-study structural constants.
  double a0 = 0.7, a4 = 0.6, a5 = -0.4;
  double b0 = -1.5, b4 = -1.0, b5 = 0.75;
  double shape = 2.0;

  // Logged-study structural constants.
  Eigen::Vector4d lin_alpha{0.58, 2.5, -1.0, 0.8};
  Eigen::Vector3d lin_beta{-0.68, -1.5, 0.5};
};

// Smooth effects of the consistency DGP.
double dgp_s1(double x);  // -0.2 sin(pi x / 46)
double dgp_s2(double x);  // -0.0004 (x + 0.01 x^(1/3))
double dgp_s3(double x);  // 0.0006 exp(0.1 x)
double dgp_s4(double x);  // 0.03 x

// True linear predictors at one covariate row (xcov order of generate()).
double true_eta1(const DGPSpec& g, const Eigen::RowVectorXd& x);
double true_eta2(const DGPSpec& g, const Eigen::RowVectorXd& x);

// One dataset draw.  Covariates, then the copula pair (U,V) per row; the
// latent selection error is Phi^-1(U), the outcome is the gamma quantile of V
// at mean exp(eta2).  Unselected outcomes are NaN.
Dataset generate(const DGPSpec& g);

// Fitted-model configurations compared in the studies.
//   Gassm: the copula selection model matching the DGP structure;
//   Gam: outcome equation alone on selected rows (independence);
//   Logged: Gaussian margin + Normal copula on log outcomes;
//   Degenerate: returns constants (harness self-test).
enum class EstimatorKind { Gassm, Gam, Logged, Degenerate };

std::string estimator_name(EstimatorKind k);

// Model layout an estimator uses for a given study (margins, copula, terms).
ModelSpec study_model_spec(const DGPSpec& g, EstimatorKind kind);

struct ParamStat {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;            // population form, so rmse^2 = bias^2 + sd^2
  double rel_bias_pct = 0.0;  // 100 (mean - truth) / truth
  double rmse = 0.0;
};

struct SmoothStat {
  std::string column;
  double mise = 0.0;  // grid-centered integrated squared error, averaged
};

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::Gassm;
  int n_ok = 0;
  int n_fail = 0;
  std::vector<ParamStat> params;
  std::vector<SmoothStat> smooths;  // outcome-equation smooths
  double test_error = 0.0;          // mean outcome deviance on the test set
  double eta2_mse = 0.0;            // on the fixed evaluation grid
};

struct MCReport {
  DGPSpec dgp;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;
};

// Seeded replications on identical datasets per estimator.  Per-replication
// seeds are derived from `seed`, so results do not depend on `threads`.
// Failed fits (exceptions, non-finite estimates) are excluded and counted.
MCReport mc_study(const DGPSpec& dgp, const std::vector<EstimatorKind>& kinds,
                  int reps, std::uint64_t seed, int threads = 1);

}  // namespace gassm
