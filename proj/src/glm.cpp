#include "gassm/glm.hpp"

#include <cmath>
#include <stdexcept>

#include "gassm/margins.hpp"
#include "gassm/special.hpp"

namespace gassm {

SingleEqLik::SingleEqLik(const EqDesign& eq, Eigen::VectorXd y,
                         Eigen::VectorXd weights, GlmFamily family,
                         bool estimate_aux, double aux0, double ridge)
    : eq_(&eq),
      y_(std::move(y)),
      w_(std::move(weights)),
      family_(family),
      aux_active_(estimate_aux && family != GlmFamily::Probit),
      aux0_(aux0),
      ridge_(ridge) {
  dim_ = eq.dim + (aux_active_ ? 1 : 0);
  for (const auto& t : eq.terms)
    if (t.smooth) blocks_.push_back({t.offset, t.size, t.penalty});
}

void SingleEqLik::eval(const Eigen::VectorXd& x, ObjectiveEval& out,
                       bool need_hess) const {
  const int m = eq_->dim;
  const Eigen::VectorXd coef = x.head(m);
  const double aux = aux_active_ ? x[m] : aux0_;
  const Eigen::VectorXd eta = eq_->X * coef;
  const Eigen::Index n = y_.size();

  Eigen::VectorXd b(n), w(n), wa(n);
  double ll = 0.0, ga = 0.0, haa = 0.0;
  out.ok = true;
  out.bad_row = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w_[i] == 0.0) {
      b[i] = w[i] = wa[i] = 0.0;
      continue;
    }
    double li, bi, wi, dai = 0.0, waai = 0.0, wai = 0.0;
    if (family_ == GlmFamily::Probit) {
      const double e = eta[i];
      if (y_[i] == 1.0) {
        const double xi = inv_mills(e);
        li = norm_logcdf(e);
        bi = xi;
        wi = -xi * (e + xi);
      } else {
        const double xi = inv_mills(-e);
        li = norm_logcdf(-e);
        bi = -xi;
        wi = -xi * (xi - e);
      }
    } else {
      const MarginFamily mf = family_ == GlmFamily::Gaussian
                                  ? MarginFamily::Gaussian
                                  : MarginFamily::Gamma;
      const MarginEval me = margin_eval(mf, y_[i], eta[i], aux);
      li = me.logpdf;
      bi = me.dlogpdf_deta;
      wi = me.d2logpdf_deta2;
      dai = me.dlogpdf_daux;
      waai = me.d2logpdf_daux2;
      wai = me.d2logpdf_detadaux;
    }
    if (!std::isfinite(li) || !std::isfinite(bi) || !std::isfinite(wi)) {
      out.ok = false;
      out.bad_row = i;
      return;
    }
    ll += li;
    b[i] = bi;
    w[i] = wi;
    wa[i] = wai;
    ga += dai;
    haa += waai;
  }

  out.value = ll - 0.5 * ridge_ * x.squaredNorm();
  out.grad.resize(dim_);
  out.grad.head(m) = eq_->X.transpose() * b;
  if (aux_active_) out.grad[m] = ga;
  out.grad -= ridge_ * x;
  if (!std::isfinite(out.value) || !out.grad.allFinite()) {
    out.ok = false;
    return;
  }
  if (!need_hess) return;
  out.hess.setZero(dim_, dim_);
  out.hess.topLeftCorner(m, m) = eq_->X.transpose() * (w.asDiagonal() * eq_->X);
  if (aux_active_) {
    out.hess.block(0, m, m, 1) = eq_->X.transpose() * wa;
    out.hess.block(m, 0, 1, m) = out.hess.block(0, m, m, 1).transpose();
    out.hess(m, m) = haa;
  }
  out.hess -= ridge_ * Eigen::MatrixXd::Identity(dim_, dim_);
  if (!out.hess.allFinite()) out.ok = false;
}

GlmFit fit_glm(const EqDesign& eq, const Eigen::VectorXd& y,
               const Eigen::VectorXd& weights, GlmFamily family,
               bool estimate_aux, double aux0, double ridge,
               const FitOpts& opts) {
  SingleEqLik lik(eq, y, weights, family, estimate_aux, aux0, ridge);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lik.dim());
  // Intercept start from the mean response on the used rows.
  const double wsum = weights.sum();
  const double ybar = (weights.array() * y.array()).sum() / std::max(wsum, 1.0);
  if (family == GlmFamily::Probit) {
    const double p = std::clamp(ybar, 1e-3, 1.0 - 1e-3);
    x0[0] = norm_quantile(p);
  } else if (family == GlmFamily::Gaussian) {
    x0[0] = ybar;
  } else {
    x0[0] = std::log(std::max(ybar, 1e-8));
  }
  if (lik.aux_active()) x0[lik.dim() - 1] = aux0;
  const Eigen::Index q = lik.penalty_blocks().size();
  const Eigen::VectorXd lam0 = Eigen::VectorXd::Ones(q);
  const double n_tilde = wsum;
  GlmFit out;
  out.fit = fit_penalized(lik, x0, lam0, n_tilde, opts);
  out.coef = out.fit.x.head(eq.dim);
  out.aux = lik.aux_active() ? out.fit.x[lik.dim() - 1] : aux0;
  out.lambda = out.fit.lambda;
  return out;
}

}  // namespace gassm
