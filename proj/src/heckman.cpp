#include "gassm/heckman.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "gassm/special.hpp"
#include "gassm/splines.hpp"

namespace gassm {

namespace {

void require_linear(const ModelSpec& spec) {
  for (const auto& t : spec.sel_terms)
    if (t.smooth) throw std::invalid_argument("heckman: linear spec required");
  for (const auto& t : spec.out_terms)
    if (t.smooth) throw std::invalid_argument("heckman: linear spec required");
}

bool exclusion_present(const ModelSpec& spec) {
  std::set<std::string> out_cols;
  for (const auto& t : spec.out_terms) out_cols.insert(t.column);
  for (const auto& t : spec.sel_terms)
    if (!out_cols.count(t.column)) return true;
  return false;
}

}  // namespace

TwoStepFit two_step(const Dataset& data, const ModelSpec& spec) {
  require_linear(spec);
  validate(data, spec);
  const DesignBlocks design = build_design(data, spec);
  const Eigen::Index n = data.n();

  TwoStepFit out;
  out.has_exclusion = exclusion_present(spec);
  out.n_sel = static_cast<Eigen::Index>(data.sel.sum());

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  GlmFit probit = fit_glm(design.eq1, data.sel, ones, GlmFamily::Probit);
  out.beta1 = probit.coef;
  out.probit_converged = probit.fit.inner_converged;

  const Eigen::VectorXd eta1 = design.eq1.X * out.beta1;
  Eigen::MatrixXd X2(out.n_sel, design.eq2.dim + 1);
  Eigen::VectorXd y2(out.n_sel), xi(out.n_sel), e1(out.n_sel);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.sel[i] != 1.0) continue;
    X2.row(r).head(design.eq2.dim) = design.eq2.X.row(i);
    xi[r] = inv_mills(eta1[i]);
    X2(r, design.eq2.dim) = xi[r];
    y2[r] = data.out[i];
    e1[r] = eta1[i];
    ++r;
  }
  out.xi = xi;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X2);
  if (qr.rank() < X2.cols())
    throw std::runtime_error("heckman: singular second-stage design");
  const Eigen::VectorXd coef = qr.solve(y2);
  out.beta2 = coef.head(design.eq2.dim);
  out.gamma = coef[design.eq2.dim];

  const Eigen::VectorXd resid = y2 - X2 * coef;
  const double ns = static_cast<double>(out.n_sel);
  const double correction =
      (xi.array() * (xi.array() + e1.array())).sum() / ns;
  out.sigma = std::sqrt(resid.squaredNorm() / ns + correction);
  out.rho_raw = out.gamma / out.sigma;
  out.rho = std::clamp(out.rho_raw, -1.0, 1.0);
  return out;
}

namespace {

// Bivariate-normal selection likelihood over [beta1 | beta2 | ls | ar] with
// ls = log sigma and ar = atanh rho.  Gradient is analytic; the Hessian is a
// central finite difference of the gradient (the parameter count is small).
class FimlLik : public PenalizedObjective {
 public:
  FimlLik(const Dataset& data, const DesignBlocks& design)
      : data_(&data), design_(&design) {
    m1_ = design.eq1.dim;
    m2_ = design.eq2.dim;
    dim_ = m1_ + m2_ + 2;
  }

  int dim() const override { return dim_; }
  const std::vector<PenaltyBlock>& penalty_blocks() const override {
    return blocks_;
  }

  bool value_grad(const Eigen::VectorXd& x, double& value,
                  Eigen::VectorXd& grad) const {
    const Eigen::VectorXd eta1 = design_->eq1.X * x.head(m1_);
    const Eigen::VectorXd eta2 = design_->eq2.X * x.segment(m1_, m2_);
    const double sigma = std::exp(x[m1_ + m2_]);
    const double rho = std::tanh(x[m1_ + m2_ + 1]);
    const double s = std::sqrt(1.0 - rho * rho);
    const Eigen::Index n = data_->n();

    value = 0.0;
    Eigen::VectorXd b1 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(n);
    double gs = 0.0, gr = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (data_->sel[i] == 0.0) {
        value += norm_logcdf(-eta1[i]);
        b1[i] = -inv_mills(-eta1[i]);
        continue;
      }
      const double t = (data_->out[i] - eta2[i]) / sigma;
      const double A = (eta1[i] + rho * t) / s;
      const double xiA = inv_mills(A);
      value += norm_logcdf(A) - 0.5 * t * t - 0.5 * std::log(2.0 * M_PI) -
               std::log(sigma);
      b1[i] = xiA / s;
      b2[i] = t / sigma - xiA * rho / (sigma * s);
      gs += t * t - 1.0 - xiA * rho * t / s;
      gr += xiA * (t * s + A * rho);
    }
    grad.resize(dim_);
    grad.head(m1_) = design_->eq1.X.transpose() * b1;
    grad.segment(m1_, m2_) = design_->eq2.X.transpose() * b2;
    grad[m1_ + m2_] = gs;
    grad[m1_ + m2_ + 1] = gr;
    return std::isfinite(value) && grad.allFinite();
  }

  void eval(const Eigen::VectorXd& x, ObjectiveEval& out,
            bool need_hess) const override {
    out.ok = value_grad(x, out.value, out.grad);
    if (!out.ok || !need_hess) return;
    out.hess.resize(dim_, dim_);
    Eigen::VectorXd xp = x, gp(dim_), gm(dim_);
    double v;
    for (int j = 0; j < dim_; ++j) {
      const double h = 1e-5 * (1.0 + std::abs(x[j]));
      xp[j] = x[j] + h;
      const bool okp = value_grad(xp, v, gp);
      xp[j] = x[j] - h;
      const bool okm = value_grad(xp, v, gm);
      xp[j] = x[j];
      if (!okp || !okm) {
        out.ok = false;
        return;
      }
      out.hess.col(j) = (gp - gm) / (2.0 * h);
    }
    out.hess = 0.5 * (out.hess + out.hess.transpose()).eval();
  }

 private:
  const Dataset* data_;
  const DesignBlocks* design_;
  int m1_ = 0, m2_ = 0, dim_ = 0;
  std::vector<PenaltyBlock> blocks_;
};

}  // namespace

FimlFit gaussian_fiml(const Dataset& data, const ModelSpec& spec,
                      const TrustRegionOpts& opts) {
  require_linear(spec);
  validate(data, spec);
  const DesignBlocks design = build_design(data, spec);
  const Eigen::Index n = data.n();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  // Starting values: probit stage, OLS on selected rows, rho = 0.
  GlmFit probit = fit_glm(design.eq1, data.sel, ones, GlmFamily::Probit);
  const Eigen::Index ns = static_cast<Eigen::Index>(data.sel.sum());
  Eigen::MatrixXd Xs(ns, design.eq2.dim);
  Eigen::VectorXd ys(ns);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.sel[i] != 1.0) continue;
    Xs.row(r) = design.eq2.X.row(i);
    ys[r] = data.out[i];
    ++r;
  }
  const Eigen::VectorXd bols = Xs.colPivHouseholderQr().solve(ys);
  const double rss = (ys - Xs * bols).squaredNorm();
  const double ls0 =
      0.5 * std::log(std::max(rss / std::max<double>(ns, 1), 1e-12));

  FimlLik lik(data, design);
  Eigen::VectorXd x0(lik.dim());
  x0.head(design.eq1.dim) = probit.coef;
  x0.segment(design.eq1.dim, design.eq2.dim) = bols;
  x0[design.eq1.dim + design.eq2.dim] = ls0;
  x0[design.eq1.dim + design.eq2.dim + 1] = 0.0;

  const Eigen::VectorXd no_lambda;
  TrustRegionResult tr = trust_region_fit(lik, x0, no_lambda, opts);

  FimlFit out;
  out.beta1 = tr.x.head(design.eq1.dim);
  out.beta2 = tr.x.segment(design.eq1.dim, design.eq2.dim);
  out.log_sigma = tr.x[design.eq1.dim + design.eq2.dim];
  out.atanh_rho = tr.x[design.eq1.dim + design.eq2.dim + 1];
  out.sigma = std::exp(out.log_sigma);
  out.rho = std::tanh(out.atanh_rho);
  out.loglik = tr.value;
  out.converged = tr.converged;
  out.iters = tr.iters;
  Eigen::MatrixXd negH = -tr.eval.hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(negH);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], floor);
  out.cov = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
  return out;
}

}  // namespace gassm
