#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gassm/data.hpp"

namespace gassm {

// Knot sequence on [0,1]: K equidistant interior intervals with p-fold
// coincident boundary knots; length K + 2p + 1, carrying K + p basis
// functions of degree p.
std::vector<double> make_knots(int K, int p);

// Values of all K+p B-spline basis functions at x in [0,1] (x is clamped).
// Cox-de Boor recursion; rows sum to one.
Eigen::RowVectorXd bspline_row(const std::vector<double>& knots, int p, double x);

// m-th order difference matrix, (dim-m) x dim.
Eigen::MatrixXd difference_penalty(int m, int dim);

// One model term after basis construction.  Smooth terms store everything
// needed to rebuild their design columns for new covariate values: the
// min-max rescale range, the basis configuration and the sum-to-zero
// centering transform Z (orthonormal null space of the data column-sum
// vector, rebuilt deterministically from `center`).
struct TermLayout {
  std::string column;
  bool smooth = false;
  int offset = 0;  // first coefficient column inside the equation block
  int size = 1;
  int K = 0, degree = 0, diff_order = 0;
  double lo = 0.0, hi = 1.0;
  Eigen::VectorXd center;   // basis column sums over the build data
  Eigen::MatrixXd Z;        // (K+degree) x (K+degree-1)
  Eigen::MatrixXd penalty;  // size x size; empty for linear terms
};

// Orthonormal basis of the null space of c', via Householder QR; the first
// column of the full Q is dropped.
Eigen::MatrixXd nullspace_transform(const Eigen::VectorXd& c);

struct EqDesign {
  Eigen::MatrixXd X;  // n x dim, column 0 is the intercept
  std::vector<TermLayout> terms;
  int dim = 1;
  int n_smooth() const;
};

struct DesignBlocks {
  EqDesign eq1;  // selection
  EqDesign eq2;  // outcome
};

DesignBlocks build_design(const Dataset& data, const ModelSpec& spec);

// Fills one design row from covariate values (same code path the fitted-model
// predictor uses, so fitting and prediction agree exactly).
void design_row(const std::vector<TermLayout>& terms,
                const Eigen::RowVectorXd& xrow,
                const std::vector<int>& term_cols,
                Eigen::RowVectorXd& out);

// Centered smooth curve s_j(x) at x for one term, given that term's slice of
// the coefficient vector.
double smooth_value(const TermLayout& t, double x, const Eigen::VectorXd& gamma);

}  // namespace gassm
