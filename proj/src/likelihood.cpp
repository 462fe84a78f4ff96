#include "gassm/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "gassm/special.hpp"

namespace gassm {

double z_fn(const CopulaFamily& fam, MarginFamily margin, double y2,
            double eta1, double eta2, double aux) {
  const double u = norm_cdf(-eta1);
  const double v = margin_cdf(margin, y2, eta2, aux);
  return copula_derivs(fam, u, v).dv;
}

double selection_bias(const CopulaFamily& fam, MarginFamily margin,
                      double eta1, double eta2, double aux) {
  const double u0 = norm_cdf(-eta1);        // P(Y1 = 0)
  const double p1 = 1.0 - u0;
  const double ylo = margin_quantile(margin, 1e-11, eta2, aux);
  const double yhi = margin_quantile(margin, 1.0 - 1e-11, eta2, aux);
  // int y z(y) f2(y) dy, z = dC/dv at (F1(0), F2(y))
  auto f = [&](double y) {
    const double v = margin_cdf(margin, y, eta2, aux);
    const double z = copula_derivs(fam, u0, v).dv;
    return y * z * std::exp(margin_logpdf(margin, y, eta2, aux));
  };
  const double ey = margin_mean(margin, eta2, aux);
  const double scale = std::max(std::fabs(ey), 1.0);
  const double integral = integrate(f, ylo, yhi, 1e-9 * scale);
  return (u0 * ey - integral) / p1;
}

namespace {

constexpr double kCdfEps = 1e-14;
constexpr double kZMax = 1.0 - 1e-12;

struct RowWork {
  double ll = 0, a = 0, b = 0, c = 0, d = 0;
  double w1 = 0, w2 = 0, w3 = 0, w4 = 0, w5 = 0, w6 = 0, w7 = 0, w8 = 0,
         w9 = 0, w10 = 0;
  bool finite = true;
};

// All per-observation likelihood terms.  theta is on the natural scale; the
// caller applies the link chain rule.  For y1 = 0 only ll/a/w1 are nonzero.
RowWork row_terms(const CopulaFamily& fam, MarginFamily margin, double y1,
                  double y2, double eta1, double eta2, double aux,
                  SelectionLik::ClampStats* clamps) {
  RowWork r;
  if (y1 == 0.0) {
    r.ll = norm_logcdf(-eta1);
    const double xi = inv_mills(-eta1);  // phi(-eta1)/Phi(-eta1)
    r.a = -xi;
    r.w1 = eta1 * xi - xi * xi;
    r.finite = std::isfinite(r.ll) && std::isfinite(r.w1);
    return r;
  }
  double u = norm_cdf(-eta1);
  if (u < kCdfEps || u > 1.0 - kCdfEps) {
    u = std::clamp(u, kCdfEps, 1.0 - kCdfEps);
    if (clamps) ++clamps->cdf;
  }
  const MarginEval m = margin_eval(margin, y2, eta2, aux);
  double v = m.cdf;
  if (v < kCdfEps || v > 1.0 - kCdfEps) {
    v = std::clamp(v, kCdfEps, 1.0 - kCdfEps);
    if (clamps) ++clamps->cdf;
  }
  const CopulaDerivs cd = copula_derivs(fam, u, v);
  double z = cd.dv;
  if (!(z <= kZMax) || z < 0.0) {
    z = std::clamp(z, 0.0, kZMax);
    if (clamps) ++clamps->z;
  }
  const double one = 1.0 - z;
  const double phi1 = norm_pdf(eta1);  // = phi(-eta1)
  const double zp = cd.dvv * m.dcdf_deta;
  const double zpp = cd.dvvv * m.dcdf_deta * m.dcdf_deta + cd.dvv * m.d2cdf_deta2;
  const double S = cd.dvv * m.dcdf_daux;  // dz/daux

  r.ll = m.logpdf + std::log1p(-z);
  r.a = phi1 * cd.duv / one;
  r.b = m.dlogpdf_deta - zp / one;
  r.c = -cd.dtheta_dv / one;
  r.d = m.dlogpdf_daux - S / one;

  r.w1 = -eta1 * phi1 * cd.duv / one - phi1 * phi1 * cd.duuv / one -
         phi1 * phi1 * cd.duv * cd.duv / (one * one);
  r.w2 = m.d2logpdf_deta2 - zpp / one - zp * zp / (one * one);
  r.w3 = phi1 * (cd.duvv * m.dcdf_deta / one + cd.duv * zp / (one * one));
  r.w4 = phi1 * (cd.dtheta_duv / one + cd.duv * cd.dtheta_dv / (one * one));
  r.w5 = -cd.dtheta_dvv * m.dcdf_deta / one - cd.dtheta_dv * zp / (one * one);
  r.w6 = -cd.dtheta2_dv / one - cd.dtheta_dv * cd.dtheta_dv / (one * one);
  r.w7 = phi1 * (cd.duvv * m.dcdf_daux / one + cd.duv * S / (one * one));
  r.w8 = m.d2logpdf_detadaux -
         (cd.dvvv * m.dcdf_daux * m.dcdf_deta + cd.dvv * m.d2cdf_detadaux) / one -
         zp * S / (one * one);
  r.w9 = -cd.dtheta_dvv * m.dcdf_daux / one - cd.dtheta_dv * S / (one * one);
  r.w10 = m.d2logpdf_daux2 -
          (cd.dvvv * m.dcdf_daux * m.dcdf_daux + cd.dvv * m.d2cdf_daux2) / one -
          S * S / (one * one);

  r.finite = std::isfinite(r.ll) && std::isfinite(r.a) && std::isfinite(r.b) &&
             std::isfinite(r.c) && std::isfinite(r.d) && std::isfinite(r.w1) &&
             std::isfinite(r.w2) && std::isfinite(r.w3) && std::isfinite(r.w4) &&
             std::isfinite(r.w5) && std::isfinite(r.w6) && std::isfinite(r.w7) &&
             std::isfinite(r.w8) && std::isfinite(r.w9) && std::isfinite(r.w10);
  return r;
}

}  // namespace

SelectionLik::SelectionLik(const Dataset& data, const ModelSpec& spec,
                           const DesignBlocks& design)
    : data_(&data), spec_(&spec), design_(&design) {
  layout_.m1 = design.eq1.dim;
  layout_.m2 = design.eq2.dim;
  layout_.theta_active = !spec.fix_theta;
  layout_.aux_active = spec.estimate_aux;
  fixed_ = Eigen::VectorXd::Zero(layout_.full_dim());
  const double th0 =
      std::isfinite(spec.theta_init) ? spec.theta_init : theta_start(spec.copula);
  fixed_[layout_.theta_idx()] = theta_to_unconstrained(spec.copula, th0);
  fixed_[layout_.aux_idx()] =
      std::isfinite(spec.aux_init) ? std::log(spec.aux_init) : 0.0;
  for (const auto& t : design.eq1.terms)
    if (t.smooth) blocks_.push_back({t.offset, t.size, t.penalty});
  for (const auto& t : design.eq2.terms)
    if (t.smooth) blocks_.push_back({layout_.m1 + t.offset, t.size, t.penalty});
}

Eigen::VectorXd SelectionLik::expand(const Eigen::VectorXd& active) const {
  Eigen::VectorXd full = fixed_;
  full.head(layout_.m1 + layout_.m2) = active.head(layout_.m1 + layout_.m2);
  int k = layout_.m1 + layout_.m2;
  if (layout_.theta_active) full[layout_.theta_idx()] = active[k++];
  if (layout_.aux_active) full[layout_.aux_idx()] = active[k++];
  return full;
}

Eigen::VectorXd SelectionLik::restrict(const Eigen::VectorXd& full) const {
  Eigen::VectorXd act(layout_.active_dim());
  act.head(layout_.m1 + layout_.m2) = full.head(layout_.m1 + layout_.m2);
  int k = layout_.m1 + layout_.m2;
  if (layout_.theta_active) act[k++] = full[layout_.theta_idx()];
  if (layout_.aux_active) act[k++] = full[layout_.aux_idx()];
  return act;
}

void SelectionLik::eval(const Eigen::VectorXd& x, ObjectiveEval& out,
                        bool need_hess) const {
  const int m1 = layout_.m1, m2 = layout_.m2;
  const Eigen::VectorXd full = expand(x);
  const Eigen::VectorXd alpha = full.head(m1);
  const Eigen::VectorXd beta = full.segment(m1, m2);
  const double th_t = full[layout_.theta_idx()];
  const double aux = full[layout_.aux_idx()];
  const CopulaFamily fam{spec_->copula,
                         theta_from_unconstrained(spec_->copula, th_t)};
  const auto [dth, d2th] = theta_link_derivs(spec_->copula, th_t);

  const Eigen::Index n = data_->n();
  const Eigen::MatrixXd& X1 = design_->eq1.X;
  const Eigen::MatrixXd& X2 = design_->eq2.X;
  const Eigen::VectorXd eta1 = X1 * alpha;
  const Eigen::VectorXd eta2 = X2 * beta;

  clamps_ = ClampStats{};
  Eigen::VectorXd a(n), b(n), w1(n), w2(n), w3(n), w4(n), w5(n), w7(n), w8(n);
  double ll = 0, csum = 0, dsum = 0, w6s = 0, w9s = 0, w10s = 0;
  out.ok = true;
  out.bad_row = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const RowWork r = row_terms(fam, spec_->margin, data_->sel[i], data_->out[i],
                                eta1[i], eta2[i], aux, &clamps_);
    if (!r.finite) {
      out.ok = false;
      out.bad_row = i;
      return;
    }
    ll += r.ll;
    a[i] = r.a;
    b[i] = r.b;
    csum += r.c;
    dsum += r.d;
    w1[i] = r.w1;
    w2[i] = r.w2;
    w3[i] = r.w3;
    w4[i] = r.w4;
    w5[i] = r.w5;
    w6s += r.w6;
    w7[i] = r.w7;
    w8[i] = r.w8;
    w9s += r.w9;
    w10s += r.w10;
  }

  const int fd = layout_.full_dim();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(fd);
  g.head(m1) = X1.transpose() * a;
  g.segment(m1, m2) = X2.transpose() * b;
  g[layout_.theta_idx()] = dth * csum;
  g[layout_.aux_idx()] = dsum;

  out.value = ll;
  out.grad = restrict(g);
  if (!std::isfinite(ll) || !out.grad.allFinite()) {
    out.ok = false;
    return;
  }
  if (!need_hess) return;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(fd, fd);
  const Eigen::MatrixXd X1w = w1.asDiagonal() * X1;
  const Eigen::MatrixXd X2w = w2.asDiagonal() * X2;
  H.topLeftCorner(m1, m1) = X1.transpose() * X1w;
  H.block(m1, m1, m2, m2) = X2.transpose() * X2w;
  H.block(0, m1, m1, m2) = X1.transpose() * (w3.asDiagonal() * X2);
  H.block(m1, 0, m2, m1) = H.block(0, m1, m1, m2).transpose();
  const int ti = layout_.theta_idx(), si = layout_.aux_idx();
  H.block(0, ti, m1, 1) = dth * (X1.transpose() * w4);
  H.block(m1, ti, m2, 1) = dth * (X2.transpose() * w5);
  H(ti, ti) = dth * dth * w6s + d2th * csum;
  H.block(0, si, m1, 1) = X1.transpose() * w7;
  H.block(m1, si, m2, 1) = X2.transpose() * w8;
  H(ti, si) = dth * w9s;
  H(si, si) = w10s;
  H.block(ti, 0, 1, m1) = H.block(0, ti, m1, 1).transpose();
  H.block(ti, m1, 1, m2) = H.block(m1, ti, m2, 1).transpose();
  H.block(si, 0, 1, m1) = H.block(0, si, m1, 1).transpose();
  H.block(si, m1, 1, m2) = H.block(m1, si, m2, 1).transpose();
  H(si, ti) = H(ti, si);

  // Restrict to active coordinates.
  std::vector<int> idx;
  idx.reserve(dim());
  for (int j = 0; j < m1 + m2; ++j) idx.push_back(j);
  if (layout_.theta_active) idx.push_back(ti);
  if (layout_.aux_active) idx.push_back(si);
  out.hess.resize(idx.size(), idx.size());
  for (size_t r = 0; r < idx.size(); ++r)
    for (size_t c = 0; c < idx.size(); ++c) out.hess(r, c) = H(idx[r], idx[c]);
  if (!out.hess.allFinite()) out.ok = false;
}

void SelectionLik::eval_expected(const Eigen::VectorXd& x,
                                 ObjectiveEval& out) const {
  // Observed value and gradient, expectation only for the Hessian weights.
  eval(x, out, false);
  if (!out.ok) return;

  const int m1 = layout_.m1, m2 = layout_.m2;
  const Eigen::VectorXd full = expand(x);
  const double th_t = full[layout_.theta_idx()];
  const double aux = full[layout_.aux_idx()];
  const CopulaFamily fam{spec_->copula,
                         theta_from_unconstrained(spec_->copula, th_t)};
  const auto [dth, d2th] = theta_link_derivs(spec_->copula, th_t);
  const Eigen::VectorXd eta1 = design_->eq1.X * full.head(m1);
  const Eigen::VectorXd eta2 = design_->eq2.X * full.segment(m1, m2);

  const Eigen::Index n = data_->n();
  Eigen::VectorXd w1(n), w2(n), w3(n), w4(n), w5(n), w7(n), w8(n);
  double csum = 0, w6s = 0, w9s = 0, w10s = 0;
  const double ylo_q = 1e-9, yhi_q = 1.0 - 1e-9;
  for (Eigen::Index i = 0; i < n; ++i) {
    // P(Y1=0) branch: only w1 receives mass.
    const RowWork r0 =
        row_terms(fam, spec_->margin, 0.0, 0.0, eta1[i], eta2[i], aux, nullptr);
    const double u = norm_cdf(-eta1[i]);
    RowWork acc;
    acc.w1 = u * r0.w1;
    // Observed branch: integrate all weights against f2(y)(1 - z(y)) in one
    // fixed-order pass; 64 nodes are ample for these smooth integrands.
    const double ylo = margin_quantile(spec_->margin, ylo_q, eta2[i], aux);
    const double yhi = margin_quantile(spec_->margin, yhi_q, eta2[i], aux);
    static const GaussLegendre gl = gauss_legendre(64);
    const double mid = 0.5 * (ylo + yhi), hw = 0.5 * (yhi - ylo);
    for (int q = 0; q < 64; ++q) {
      const double y = mid + hw * gl.x[q];
      const RowWork r =
          row_terms(fam, spec_->margin, 1.0, y, eta1[i], eta2[i], aux, nullptr);
      // r.ll = log f2 + log(1-z), the joint density of (Y1=1, y)
      const double wt = gl.w[q] * hw * std::exp(r.ll);
      acc.w1 += wt * r.w1;
      acc.w2 += wt * r.w2;
      acc.w3 += wt * r.w3;
      acc.w4 += wt * r.w4;
      acc.w5 += wt * r.w5;
      acc.w6 += wt * r.w6;
      acc.w7 += wt * r.w7;
      acc.w8 += wt * r.w8;
      acc.w9 += wt * r.w9;
      acc.w10 += wt * r.w10;
    }
    w1[i] = acc.w1;
    w2[i] = acc.w2;
    w3[i] = acc.w3;
    w4[i] = acc.w4;
    w5[i] = acc.w5;
    w6s += acc.w6;
    w7[i] = acc.w7;
    w8[i] = acc.w8;
    w9s += acc.w9;
    w10s += acc.w10;
    // csum for the link second-order term uses the observed gradient piece.
    const RowWork robs = row_terms(fam, spec_->margin, data_->sel[i],
                                   data_->out[i], eta1[i], eta2[i], aux, nullptr);
    csum += robs.c;
  }

  const int fd = layout_.full_dim();
  const Eigen::MatrixXd& X1 = design_->eq1.X;
  const Eigen::MatrixXd& X2 = design_->eq2.X;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(fd, fd);
  H.topLeftCorner(m1, m1) = X1.transpose() * (w1.asDiagonal() * X1);
  H.block(m1, m1, m2, m2) = X2.transpose() * (w2.asDiagonal() * X2);
  H.block(0, m1, m1, m2) = X1.transpose() * (w3.asDiagonal() * X2);
  H.block(m1, 0, m2, m1) = H.block(0, m1, m1, m2).transpose();
  const int ti = layout_.theta_idx(), si = layout_.aux_idx();
  H.block(0, ti, m1, 1) = dth * (X1.transpose() * w4);
  H.block(m1, ti, m2, 1) = dth * (X2.transpose() * w5);
  H(ti, ti) = dth * dth * w6s + d2th * csum;
  H.block(0, si, m1, 1) = X1.transpose() * w7;
  H.block(m1, si, m2, 1) = X2.transpose() * w8;
  H(ti, si) = dth * w9s;
  H(si, si) = w10s;
  H.block(ti, 0, 1, m1) = H.block(0, ti, m1, 1).transpose();
  H.block(ti, m1, 1, m2) = H.block(m1, ti, m2, 1).transpose();
  H.block(si, 0, 1, m1) = H.block(0, si, m1, 1).transpose();
  H.block(si, m1, 1, m2) = H.block(m1, si, m2, 1).transpose();
  H(si, ti) = H(ti, si);

  std::vector<int> idx;
  for (int j = 0; j < m1 + m2; ++j) idx.push_back(j);
  if (layout_.theta_active) idx.push_back(ti);
  if (layout_.aux_active) idx.push_back(si);
  out.hess.resize(idx.size(), idx.size());
  for (size_t r = 0; r < idx.size(); ++r)
    for (size_t c = 0; c < idx.size(); ++c) out.hess(r, c) = H(idx[r], idx[c]);
  out.ok = out.hess.allFinite();
}

void add_penalty(const PenalizedObjective& obj, const Eigen::VectorXd& lambda,
                 const Eigen::VectorXd& x, ObjectiveEval& ev, bool need_hess) {
  const auto& blocks = obj.penalty_blocks();
  if (lambda.size() != static_cast<Eigen::Index>(blocks.size()))
    throw std::invalid_argument("lambda size does not match penalty blocks");
  for (size_t j = 0; j < blocks.size(); ++j) {
    const auto& blk = blocks[j];
    const Eigen::VectorXd xj = x.segment(blk.offset, blk.size);
    const Eigen::VectorXd Sx = blk.S * xj;
    ev.value -= 0.5 * lambda[j] * xj.dot(Sx);
    if (ev.grad.size() > 0) ev.grad.segment(blk.offset, blk.size) -= lambda[j] * Sx;
    if (need_hess && ev.hess.size() > 0)
      ev.hess.block(blk.offset, blk.offset, blk.size, blk.size) -= lambda[j] * blk.S;
  }
}

Eigen::MatrixXd penalty_matrix(const PenalizedObjective& obj,
                               const Eigen::VectorXd& lambda) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(obj.dim(), obj.dim());
  const auto& blocks = obj.penalty_blocks();
  for (size_t j = 0; j < blocks.size(); ++j)
    S.block(blocks[j].offset, blocks[j].offset, blocks[j].size, blocks[j].size) +=
        lambda[j] * blocks[j].S;
  return S;
}

}  // namespace gassm
