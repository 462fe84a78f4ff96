#include "gassm/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gassm {

std::vector<double> make_knots(int K, int p) {
  if (K < 1 || p < 1) throw std::invalid_argument("make_knots: K and p must be >= 1");
  std::vector<double> kn;
  kn.reserve(K + 2 * p + 1);
  for (int i = 0; i < p; ++i) kn.push_back(0.0);
  for (int i = 0; i <= K; ++i) kn.push_back(static_cast<double>(i) / K);
  for (int i = 0; i < p; ++i) kn.push_back(1.0);
  return kn;
}

Eigen::RowVectorXd bspline_row(const std::vector<double>& knots, int p, double x) {
  const int nb = static_cast<int>(knots.size()) - p - 1;  // = K + p
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nb);
  x = std::clamp(x, 0.0, 1.0);
  // Degree-zero seed: indicator of the knot interval, with the last
  // nondegenerate interval closed on the right so x = 1 keeps a partition
  // of unity.
  std::vector<double> b(knots.size() - 1, 0.0);
  int span = -1;
  for (int i = 0; i < static_cast<int>(knots.size()) - 1; ++i) {
    if (knots[i] <= x && x < knots[i + 1]) { span = i; break; }
  }
  if (span < 0) {  // x == 1
    for (int i = static_cast<int>(knots.size()) - 2; i >= 0; --i)
      if (knots[i] < knots[i + 1]) { span = i; break; }
  }
  b[span] = 1.0;
  // Cox-de Boor: raise degree, 0/0 treated as 0 on coincident knots.
  for (int d = 1; d <= p; ++d) {
    for (int i = 0; i < static_cast<int>(b.size()) - d; ++i) {
      const double den1 = knots[i + d] - knots[i];
      const double den2 = knots[i + d + 1] - knots[i + 1];
      double val = 0.0;
      if (den1 > 0.0) val += (x - knots[i]) / den1 * b[i];
      if (den2 > 0.0) val += (knots[i + d + 1] - x) / den2 * b[i + 1];
      b[i] = val;
    }
  }
  for (int i = 0; i < nb; ++i) row[i] = b[i];
  return row;
}

Eigen::MatrixXd difference_penalty(int m, int dim) {
  if (m < 1 || dim <= m) throw std::invalid_argument("difference_penalty: need dim > m >= 1");
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(dim, dim);
  for (int k = 0; k < m; ++k) {
    const int r = dim - k - 1;
    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(r, r + 1);
    for (int i = 0; i < r; ++i) {
      D1(i, i) = -1.0;
      D1(i, i + 1) = 1.0;
    }
    D = D1 * D;
  }
  return D;
}

Eigen::MatrixXd nullspace_transform(const Eigen::VectorXd& c) {
  const Eigen::Index d = c.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return Q.rightCols(d - 1);
}

int EqDesign::n_smooth() const {
  int k = 0;
  for (const auto& t : terms) k += t.smooth ? 1 : 0;
  return k;
}

namespace {

EqDesign build_equation(const Dataset& data, const std::vector<TermSpec>& specs) {
  EqDesign eq;
  const Eigen::Index n = data.n();
  int dim = 1;  // intercept
  std::vector<int> cols;
  for (const auto& ts : specs) {
    TermLayout t;
    t.column = ts.column;
    t.smooth = ts.smooth;
    t.offset = dim;
    const int j = data.col(ts.column);
    cols.push_back(j);
    if (ts.smooth) {
      t.K = ts.K;
      t.degree = ts.degree;
      t.diff_order = ts.diff_order;
      t.lo = data.xcov.col(j).minCoeff();
      t.hi = data.xcov.col(j).maxCoeff();
      if (!(t.hi > t.lo)) throw std::invalid_argument("constant covariate: " + ts.column);
      const int nb = ts.K + ts.degree;
      const auto knots = make_knots(ts.K, ts.degree);
      Eigen::MatrixXd B(n, nb);
      for (Eigen::Index i = 0; i < n; ++i)
        B.row(i) = bspline_row(knots, ts.degree, (data.xcov(i, j) - t.lo) / (t.hi - t.lo));
      t.center = B.colwise().sum().transpose();
      t.Z = nullspace_transform(t.center);
      const Eigen::MatrixXd D = difference_penalty(ts.diff_order, nb);
      t.penalty = t.Z.transpose() * (D.transpose() * D) * t.Z;
      t.size = nb - 1;
    } else {
      t.size = 1;
    }
    dim += t.size;
    eq.terms.push_back(std::move(t));
  }
  eq.dim = dim;
  eq.X.resize(n, dim);
  Eigen::RowVectorXd row(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    design_row(eq.terms, data.xcov.row(i), cols, row);
    eq.X.row(i) = row;
  }
  return eq;
}

}  // namespace

DesignBlocks build_design(const Dataset& data, const ModelSpec& spec) {
  validate(data, spec);
  DesignBlocks db;
  db.eq1 = build_equation(data, spec.sel_terms);
  db.eq2 = build_equation(data, spec.out_terms);
  return db;
}

void design_row(const std::vector<TermLayout>& terms,
                const Eigen::RowVectorXd& xrow,
                const std::vector<int>& term_cols,
                Eigen::RowVectorXd& out) {
  out[0] = 1.0;
  for (size_t k = 0; k < terms.size(); ++k) {
    const TermLayout& t = terms[k];
    const double x = xrow[term_cols[k]];
    if (!t.smooth) {
      out[t.offset] = x;
      continue;
    }
    const auto knots = make_knots(t.K, t.degree);
    const Eigen::RowVectorXd B =
        bspline_row(knots, t.degree, (x - t.lo) / (t.hi - t.lo));
    out.segment(t.offset, t.size) = B * t.Z;
  }
}

double smooth_value(const TermLayout& t, double x, const Eigen::VectorXd& gamma) {
  const auto knots = make_knots(t.K, t.degree);
  const Eigen::RowVectorXd B =
      bspline_row(knots, t.degree, (x - t.lo) / (t.hi - t.lo));
  return (B * t.Z * gamma)(0);
}

}  // namespace gassm
