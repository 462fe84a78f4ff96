#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gassm/copulas.hpp"
#include "gassm/margins.hpp"

namespace gassm {

// One term of a model formula.  Smooth terms get a cubic B-spline basis with
// K equidistant interior intervals on the min-max rescaled covariate and an
// order-m difference penalty; linear terms contribute the raw column.
struct TermSpec {
  std::string column;
  bool smooth = false;
  int K = 8;
  int degree = 3;
  int diff_order = 2;
};

struct ModelSpec {
  std::vector<TermSpec> sel_terms;
  std::vector<TermSpec> out_terms;
  MarginFamily margin = MarginFamily::Gamma;
  CopulaTag copula = CopulaTag::Frank;
  // Natural-scale starting value; NaN means the family default near
  // independence.  With fix_theta the dependence parameter is not estimated.
  double theta_init = std::numeric_limits<double>::quiet_NaN();
  bool fix_theta = false;
  // Natural scale (sigma for Gaussian, shape for Gamma); NaN = data-driven.
  double aux_init = std::numeric_limits<double>::quiet_NaN();
  bool estimate_aux = true;
  std::string sel_col = "sel";
  std::string out_col = "out";
};

// Rectangular data: a 0/1 selection indicator, an outcome observed only where
// selected (NaN elsewhere), and covariate columns.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd xcov;   // n x names.size()
  Eigen::VectorXd sel;
  Eigen::VectorXd out;

  Eigen::Index n() const { return sel.size(); }
  int col(const std::string& name) const;  // throws if absent
};

// Basic sanity checks shared by the CLI and the fitters; throws
// std::invalid_argument with a row/column message on failure.
void validate(const Dataset& data, const ModelSpec& spec);

}  // namespace gassm
