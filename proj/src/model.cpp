#include "gassm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "gassm/glm.hpp"
#include "gassm/special.hpp"

namespace gassm {

int FittedModel::active_dim() const {
  const int m = design.eq1.dim + design.eq2.dim;
  return m + (spec.fix_theta ? 0 : 1) + (spec.estimate_aux ? 1 : 0);
}

int FittedModel::active_index(int full_idx) const {
  const int m = design.eq1.dim + design.eq2.dim;
  if (full_idx < m) return full_idx;
  if (full_idx == m) return spec.fix_theta ? -1 : m;
  if (full_idx == m + 1 && spec.estimate_aux)
    return m + (spec.fix_theta ? 0 : 1);
  return -1;
}

StartValues starting_values(const Dataset& data, const ModelSpec& spec,
                            const DesignBlocks& design) {
  const Eigen::Index n = data.n();
  const int m1 = design.eq1.dim, m2 = design.eq2.dim;
  StartValues sv;
  sv.full = Eigen::VectorXd::Zero(m1 + m2 + 2);
  const int q1 = design.eq1.n_smooth(), q2 = design.eq2.n_smooth();
  sv.lambda = Eigen::VectorXd::Ones(q1 + q2);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double psel =
      std::clamp(data.sel.mean(), 1e-3, 1.0 - 1e-3);
  try {
    GlmFit probit =
        fit_glm(design.eq1, data.sel, ones, GlmFamily::Probit, false, 0.0, 1e-6);
    sv.full.head(m1) = probit.coef;
    sv.lambda.head(q1) = probit.lambda;
  } catch (const std::exception&) {
    sv.probit_ok = false;
    sv.full.head(m1).setZero();
    sv.full[0] = norm_quantile(psel);
  }

  // Outcome stage on the selected rows; unselected outcomes are masked out by
  // the weights but must still be finite numbers.
  Eigen::VectorXd yc = data.out;
  for (Eigen::Index i = 0; i < n; ++i)
    if (data.sel[i] == 0.0) yc[i] = 0.0;
  const GlmFamily fam2 = spec.margin == MarginFamily::Gaussian
                             ? GlmFamily::Gaussian
                             : GlmFamily::Gamma;
  const double ns = std::max(data.sel.sum(), 1.0);
  const double ybar = yc.sum() / ns;
  Eigen::VectorXd eta2;
  try {
    GlmFit glm = fit_glm(design.eq2, yc, data.sel, fam2, true, 0.0, 0.0);
    sv.full.segment(m1, m2) = glm.coef;
    sv.lambda.tail(q2) = glm.lambda;
    eta2 = design.eq2.X * glm.coef;
  } catch (const std::exception&) {
    sv.glm_ok = false;
    sv.full.segment(m1, m2).setZero();
    sv.full[m1] = spec.margin == MarginFamily::Gamma
                      ? std::log(std::max(ybar, 1e-8))
                      : ybar;
    eta2 = design.eq2.X * sv.full.segment(m1, m2);
  }

  const double th0 = std::isfinite(spec.theta_init) ? spec.theta_init
                                                    : theta_start(spec.copula);
  sv.full[m1 + m2] = theta_to_unconstrained(spec.copula, th0);

  if (std::isfinite(spec.aux_init)) {
    sv.full[m1 + m2 + 1] = std::log(spec.aux_init);
  } else if (!spec.estimate_aux) {
    sv.full[m1 + m2 + 1] = 0.0;
  } else if (spec.margin == MarginFamily::Gaussian) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (data.sel[i] == 1.0) ss += std::pow(yc[i] - eta2[i], 2);
    sv.full[m1 + m2 + 1] = 0.5 * std::log(std::max(ss / ns, 1e-12));
  } else {
    // Gamma shape by moments: 1 / Pearson dispersion.
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (data.sel[i] == 1.0) {
        const double mu = std::exp(eta2[i]);
        ss += std::pow((yc[i] - mu) / mu, 2);
      }
    const double disp = std::max(ss / ns, 1e-8);
    sv.full[m1 + m2 + 1] = std::log(std::clamp(1.0 / disp, 1e-4, 1e4));
  }
  return sv;
}

FittedModel fit_model(const Dataset& data, const ModelSpec& spec,
                      const FitOpts& opts) {
  validate(data, spec);
  FittedModel m;
  m.spec = spec;
  m.names = data.names;
  m.design = build_design(data, spec);

  SelectionLik lik(data, spec, m.design);
  StartValues sv = starting_values(data, spec, m.design);
  lik.set_fixed(sv.full);
  const Eigen::VectorXd x0 = lik.restrict(sv.full);

  FitOpts o = opts;
  const double n_tilde =
      o.n_tilde > 0.0 ? o.n_tilde : 3.0 * static_cast<double>(data.n());
  FitResult res = fit_penalized(lik, x0, sv.lambda, n_tilde, o);

  const int m1 = m.design.eq1.dim, m2 = m.design.eq2.dim;
  m.full = lik.expand(res.x);
  m.alpha = m.full.head(m1);
  m.beta = m.full.segment(m1, m2);
  m.theta_tilde = m.full[m1 + m2];
  m.theta = theta_from_unconstrained(spec.copula, m.theta_tilde);
  m.tau = kendall_tau({spec.copula, m.theta});
  m.aux = std::exp(m.full[m1 + m2 + 1]);
  m.lambda = res.lambda;
  m.edf = res.edf;
  m.cov = res.cov;
  m.loglik = res.loglik;
  m.penalized_loglik = res.penalized_loglik;
  m.ubre = res.ubre;
  m.hess_ridge = res.hess_ridge;
  m.converged = res.converged || lik.penalty_blocks().empty();
  m.inner_converged = res.inner_converged;
  m.cycles = res.cycles;
  m.inner_iters = res.inner_iters;
  m.clamp_cdf = lik.clamps().cdf;
  m.clamp_z = lik.clamps().z;
  return m;
}

namespace {

std::vector<int> term_columns(const std::vector<TermLayout>& terms,
                              const std::vector<std::string>& names) {
  std::vector<int> cols;
  cols.reserve(terms.size());
  for (const auto& t : terms) {
    int idx = -1;
    for (size_t j = 0; j < names.size(); ++j)
      if (names[j] == t.column) idx = static_cast<int>(j);
    if (idx < 0) throw std::invalid_argument("unknown covariate " + t.column);
    cols.push_back(idx);
  }
  return cols;
}

}  // namespace

void predict_eta(const FittedModel& m, const Eigen::RowVectorXd& xrow,
                 double& eta1, double& eta2) {
  const auto c1 = term_columns(m.design.eq1.terms, m.names);
  const auto c2 = term_columns(m.design.eq2.terms, m.names);
  Eigen::RowVectorXd r1(m.design.eq1.dim), r2(m.design.eq2.dim);
  design_row(m.design.eq1.terms, xrow, c1, r1);
  design_row(m.design.eq2.terms, xrow, c2, r2);
  eta1 = r1 * m.alpha;
  eta2 = r2 * m.beta;
}

void predictor_variance(const FittedModel& m, const Dataset& data,
                        Eigen::VectorXd& var_eta1, Eigen::VectorXd& var_eta2) {
  const int m1 = m.design.eq1.dim, m2 = m.design.eq2.dim;
  const Eigen::MatrixXd C1 = m.cov.topLeftCorner(m1, m1);
  const Eigen::MatrixXd C2 = m.cov.block(m1, m1, m2, m2);
  const Eigen::Index n = data.n();
  var_eta1.resize(n);
  var_eta2.resize(n);
  const auto c1 = term_columns(m.design.eq1.terms, m.names);
  const auto c2 = term_columns(m.design.eq2.terms, m.names);
  Eigen::RowVectorXd r1(m1), r2(m2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd xrow = data.xcov.row(i);
    design_row(m.design.eq1.terms, xrow, c1, r1);
    design_row(m.design.eq2.terms, xrow, c2, r2);
    var_eta1[i] = r1 * C1 * r1.transpose();
    var_eta2[i] = r2 * C2 * r2.transpose();
  }
}

std::vector<SmoothCurve> smooth_curves(const FittedModel& m, int npoints) {
  std::vector<SmoothCurve> out;
  const int m1 = m.design.eq1.dim;
  int block = 0;
  for (int eq = 1; eq <= 2; ++eq) {
    const EqDesign& d = eq == 1 ? m.design.eq1 : m.design.eq2;
    const Eigen::VectorXd& coef = eq == 1 ? m.alpha : m.beta;
    const int base = eq == 1 ? 0 : m1;
    for (const auto& t : d.terms) {
      if (!t.smooth) continue;
      SmoothCurve c;
      c.column = t.column;
      c.eq = eq;
      c.lambda = m.lambda[block];
      c.edf = m.edf[block];
      c.x.resize(npoints);
      c.fit.resize(npoints);
      c.se.resize(npoints);
      const Eigen::MatrixXd C =
          m.cov.block(base + t.offset, base + t.offset, t.size, t.size);
      const auto knots = make_knots(t.K, t.degree);
      const Eigen::VectorXd g = coef.segment(t.offset, t.size);
      for (int j = 0; j < npoints; ++j) {
        const double x =
            t.lo + (t.hi - t.lo) * j / static_cast<double>(npoints - 1);
        c.x[j] = x;
        const Eigen::RowVectorXd B =
            bspline_row(knots, t.degree, (x - t.lo) / (t.hi - t.lo));
        const Eigen::RowVectorXd r = B * t.Z;
        c.fit[j] = r * g;
        c.se[j] = std::sqrt(std::max(0.0, (r * C * r.transpose())(0)));
      }
      out.push_back(std::move(c));
      ++block;
    }
  }
  return out;
}

}  // namespace gassm
