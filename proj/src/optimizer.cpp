#include "gassm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gassm {

namespace {

// Exact solution of max_p g'p + 0.5 p'H p, ||p|| <= r, by eigendecomposition
// of B = -H (More-Sorensen secular iteration, explicit hard case).
Eigen::VectorXd solve_subproblem(const Eigen::VectorXd& g,
                                 const Eigen::MatrixXd& H, double r) {
  const Eigen::Index d = g.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-H);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::VectorXd gh = Q.transpose() * g;
  const double lmin = lam.minCoeff();

  auto step_for = [&](double nu) {
    Eigen::VectorXd ph(d);
    for (Eigen::Index i = 0; i < d; ++i) ph[i] = gh[i] / (lam[i] + nu);
    return ph;
  };

  if (lmin > 0.0) {
    const Eigen::VectorXd ph = step_for(0.0);
    if (ph.norm() <= r) return Q * ph;  // interior Newton step
  }

  // Hard-case detection: gradient has no component on the minimal eigenspace
  // and the regular part alone fits inside the radius at nu = -lmin.
  const double nu_floor = std::max(0.0, -lmin) * (1.0 + 1e-12) + 1e-300;
  double reg2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double gap = lam[i] + std::max(0.0, -lmin);
    if (gap > 1e-10 * (1.0 + std::fabs(lmin))) reg2 += gh[i] * gh[i] / (gap * gap);
  }
  const bool hard = lmin <= 0.0 && reg2 < r * r;
  if (hard) {
    Eigen::VectorXd ph = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double gap = lam[i] - lmin;
      if (gap > 1e-10 * (1.0 + std::fabs(lmin))) ph[i] = gh[i] / gap;
    }
    double tau2 = r * r - ph.squaredNorm();
    if (tau2 < 0.0) tau2 = 0.0;
    Eigen::Index imin = 0;
    lam.minCoeff(&imin);
    Eigen::VectorXd p = Q * ph + std::sqrt(tau2) * Q.col(imin);
    return p;
  }

  // Secular iteration on 1/r - 1/||p(nu)||.
  double nu = nu_floor + gh.norm() / r;  // safe upper-ball start
  for (int it = 0; it < 100; ++it) {
    double n2 = 0.0, n3 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double den = lam[i] + nu;
      const double t = gh[i] / den;
      n2 += t * t;
      n3 += t * t / den;
    }
    const double np = std::sqrt(n2);
    if (std::fabs(np - r) <= 1e-10 * r) break;
    double step = (np - r) / r * (n2 / n3);
    if (nu + step <= nu_floor) step = 0.5 * (nu_floor - nu);
    nu += step;
    if (std::fabs(step) < 1e-16 * (1.0 + nu)) break;
  }
  return Q * step_for(nu);
}

double rel_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace

TrustRegionResult trust_region_fit(const PenalizedObjective& obj,
                                   const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lambda,
                                   const TrustRegionOpts& opts) {
  TrustRegionResult res;
  res.x = x0;
  ObjectiveEval cur;
  obj.eval(res.x, cur, true);
  add_penalty(obj, lambda, res.x, cur, true);
  if (!cur.ok)
    throw std::runtime_error("trust_region_fit: non-finite objective at start" +
                             (cur.bad_row >= 0 ? " (row " + std::to_string(cur.bad_row) + ")" : ""));
  double radius = opts.radius0;

  for (res.iters = 0; res.iters < opts.max_iter; ++res.iters) {
    if (cur.grad.lpNorm<Eigen::Infinity>() < opts.tol_g) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd p = solve_subproblem(cur.grad, cur.hess, radius);
    const double pred = cur.grad.dot(p) + 0.5 * p.dot(cur.hess * p);
    if (!(p.norm() > 0.0) || !(pred > 1e-18 * (1.0 + std::fabs(cur.value)))) {
      res.converged = true;  // no ascent left inside the model
      break;
    }
    ObjectiveEval trial;
    obj.eval(res.x + p, trial, false);
    add_penalty(obj, lambda, res.x + p, trial, false);
    const double actual = trial.ok ? trial.value - cur.value : -1.0;
    if (!trial.ok || !(actual > 0.0)) {
      ++res.rejected;
      radius = 0.25 * p.norm();
      if (radius < 1e-13) { res.converged = cur.grad.lpNorm<Eigen::Infinity>() < 1e-3; break; }
      continue;
    }
    const double ratio = actual / pred;
    res.x += p;
    obj.eval(res.x, cur, true);
    add_penalty(obj, lambda, res.x, cur, true);
    if (!cur.ok)
      throw std::runtime_error("trust_region_fit: accepted point went non-finite");
    if (ratio < 0.25) radius = 0.25 * p.norm();
    else if (ratio > 0.75 && p.norm() > 0.99 * radius)
      radius = std::min(2.0 * radius, opts.radius_max);
    const bool small_change = actual < opts.tol_f * (1.0 + std::fabs(cur.value));
    if (small_change && cur.grad.lpNorm<Eigen::Infinity>() < opts.tol_g) {
      res.converged = true;
      ++res.iters;
      break;
    }
  }
  res.value = cur.value;
  res.eval = std::move(cur);
  return res;
}

UbreWork ubre_prepare(const ObjectiveEval& ev, const Eigen::VectorXd& x,
                      double n_tilde) {
  UbreWork w;
  w.n_tilde = n_tilde;
  Eigen::MatrixXd negH = -ev.hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(negH);
  Eigen::VectorXd lam = es.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();
  const double floor = 1e-8 * std::max(1.0, lmax);
  const double lmin = lam.minCoeff();
  w.ridge = lmin < floor ? floor - lmin : 0.0;
  lam.array() += w.ridge;
  const Eigen::MatrixXd& Q = es.eigenvectors();
  w.I = Q * lam.asDiagonal() * Q.transpose();
  w.sqrtI = Q * lam.cwiseSqrt().asDiagonal() * Q.transpose();
  w.sqrtIinv = Q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * Q.transpose();
  w.z = w.sqrtI * x + w.sqrtIinv * ev.grad;
  return w;
}

double ubre_value(const UbreWork& w, const PenalizedObjective& obj,
                  const Eigen::VectorXd& lambda) {
  const Eigen::MatrixXd M = w.I + penalty_matrix(obj, lambda);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const Eigen::MatrixXd A = w.sqrtI * ldlt.solve(w.sqrtI);
  const Eigen::VectorXd resid = w.z - A * w.z;
  return resid.squaredNorm() - w.n_tilde + 2.0 * A.trace();
}

namespace {

constexpr double kLogLamLo = -18.420680743952367;  // log 1e-8
constexpr double kLogLamHi = 18.420680743952367;   // log 1e8

Eigen::VectorXd clip_log(Eigen::VectorXd r) {
  for (Eigen::Index i = 0; i < r.size(); ++i)
    r[i] = std::clamp(r[i], kLogLamLo, kLogLamHi);
  return r;
}

// One golden-section sweep per coordinate over the full admissible range.
Eigen::VectorXd coordinate_search(const UbreWork& w,
                                  const PenalizedObjective& obj,
                                  Eigen::VectorXd rho, double& best) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
      double a = kLogLamLo, b = kLogLamHi;
      auto val = [&](double r) {
        Eigen::VectorXd rr = rho;
        rr[j] = r;
        return ubre_value(w, obj, rr.array().exp());
      };
      double c = b - gr * (b - a), d = a + gr * (b - a);
      double fc = val(c), fd = val(d);
      for (int it = 0; it < 40; ++it) {
        if (fc < fd) { b = d; d = c; fd = fc; c = b - gr * (b - a); fc = val(c); }
        else { a = c; c = d; fc = fd; d = a + gr * (b - a); fd = val(d); }
      }
      const double r = 0.5 * (a + b);
      const double fr = val(r);
      if (fr < best - 1e-12) { rho[j] = r; best = fr; }
    }
  }
  return rho;
}

}  // namespace

Eigen::VectorXd select_lambda(const UbreWork& w, const PenalizedObjective& obj,
                              const Eigen::VectorXd& lambda0) {
  const Eigen::Index q = lambda0.size();
  if (q == 0) return lambda0;
  Eigen::VectorXd rho = clip_log(lambda0.array().log());
  auto f = [&](const Eigen::VectorXd& r) {
    return ubre_value(w, obj, r.array().exp());
  };
  auto grad_fd = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd g(q);
    const double h = 1e-4;
    for (Eigen::Index j = 0; j < q; ++j) {
      Eigen::VectorXd rp = r, rm = r;
      rp[j] += h;
      rm[j] -= h;
      g[j] = (f(rp) - f(rm)) / (2.0 * h);
    }
    return g;
  };

  double fr = f(rho);
  const double f_start = fr;
  Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(q, q);
  Eigen::VectorXd g = grad_fd(rho);
  for (int it = 0; it < 50; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + std::fabs(fr))) break;
    Eigen::VectorXd dir = -Binv * g;
    if (dir.dot(g) > 0.0) dir = -g;  // reset on loss of descent
    double step = 1.0;
    Eigen::VectorXd rn;
    double fn = fr;
    bool ok = false;
    for (int ls = 0; ls < 30; ++ls) {
      rn = clip_log(rho + step * dir);
      fn = f(rn);
      if (fn <= fr + 1e-4 * g.dot(rn - rho)) { ok = true; break; }
      step *= 0.5;
    }
    if (!ok || !(fn < fr)) break;
    const Eigen::VectorXd gn = grad_fd(rn);
    const Eigen::VectorXd s = rn - rho, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::VectorXd By = Binv * y;
      Binv += ((sy + y.dot(By)) / (sy * sy)) * (s * s.transpose()) -
              (By * s.transpose() + s * By.transpose()) / sy;
    }
    if (s.norm() < 1e-7 * (1.0 + rho.norm())) { rho = rn; fr = fn; g = gn; break; }
    rho = rn;
    fr = fn;
    g = gn;
  }
  // Bracketing fallback when quasi-Newton stalls without improving.
  if (!(fr < f_start - 1e-10)) rho = coordinate_search(w, obj, rho, fr);
  return rho.array().exp();
}

Eigen::VectorXd edf_by_block(const UbreWork& w, const PenalizedObjective& obj,
                             const Eigen::VectorXd& lambda) {
  const Eigen::MatrixXd M = w.I + penalty_matrix(obj, lambda);
  const Eigen::MatrixXd T = M.ldlt().solve(w.I);  // (I+S)^-1 I
  const auto& blocks = obj.penalty_blocks();
  Eigen::VectorXd edf(blocks.size() + 1);
  for (size_t j = 0; j < blocks.size(); ++j) {
    double s = 0.0;
    for (int i = 0; i < blocks[j].size; ++i)
      s += T(blocks[j].offset + i, blocks[j].offset + i);
    edf[j] = s;
  }
  edf[blocks.size()] = T.trace();
  return edf;
}

FitResult fit_penalized(const PenalizedObjective& obj,
                        const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& lambda0, double n_tilde,
                        const FitOpts& opts) {
  FitResult out;
  const auto* sel = dynamic_cast<const SelectionLik*>(&obj);
  if (opts.expected_info && sel == nullptr)
    throw std::invalid_argument("expected_info requires the selection likelihood");
  Eigen::VectorXd x = x0, lambda = lambda0;
  const bool has_pen = !obj.penalty_blocks().empty();
  UbreWork work;

  auto info_eval = [&](const Eigen::VectorXd& at) {
    ObjectiveEval ev;
    if (opts.expected_info) sel->eval_expected(at, ev);
    else obj.eval(at, ev, true);
    if (!ev.ok) throw std::runtime_error("information matrix eval failed");
    return ev;
  };

  for (out.cycles = 1; out.cycles <= opts.max_cycles; ++out.cycles) {
    TrustRegionResult tr = trust_region_fit(obj, x, lambda, opts.tr);
    out.inner_iters += tr.iters;
    out.inner_converged = tr.converged;
    if (!has_pen) {
      x = tr.x;
      break;
    }
    const ObjectiveEval info = info_eval(tr.x);
    work = ubre_prepare(info, tr.x, n_tilde);
    const Eigen::VectorXd lam_new = select_lambda(work, obj, lambda);
    const double dl = rel_change(lam_new, lambda);
    const double dx = rel_change(tr.x, x);
    x = tr.x;
    lambda = lam_new;
    if (out.cycles > 1 && dl < opts.lambda_tol && dx < opts.delta_tol) {
      out.converged = true;
      break;
    }
  }
  {  // final inner fit at the selected lambda
    TrustRegionResult tr = trust_region_fit(obj, x, lambda, opts.tr);
    out.inner_iters += tr.iters;
    out.inner_converged = tr.converged;
    x = tr.x;
    out.penalized_loglik = tr.value;
    out.final_eval = std::move(tr.eval);
  }
  if (!has_pen) out.converged = out.inner_converged;
  out.x = x;
  out.lambda = lambda;

  ObjectiveEval plain;
  obj.eval(x, plain, true);
  out.loglik = plain.value;
  if (has_pen) {
    const ObjectiveEval info = info_eval(x);
    work = ubre_prepare(info, x, n_tilde);
    out.ubre = ubre_value(work, obj, lambda);
    out.edf = edf_by_block(work, obj, lambda);
    out.hess_ridge = work.ridge;
  } else {
    out.edf = Eigen::VectorXd::Constant(1, static_cast<double>(obj.dim()));
  }
  // Sandwich covariance (-Hp)^-1 (-H) (-Hp)^-1.
  Eigen::MatrixXd negHp = -out.final_eval.hess;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(negHp);
  Eigen::VectorXd lam = es.eigenvalues();
  const double floor = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = std::max(lam[i], floor);
  const Eigen::MatrixXd Vp = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                             es.eigenvectors().transpose();
  out.cov = Vp * (-plain.hess) * Vp;
  return out;
}

}  // namespace gassm
