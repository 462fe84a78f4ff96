#include "gassm/copulas.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gassm/special.hpp"

namespace gassm {

namespace {

// Interior floor for the joint cdf value before generator partials are taken
// at it; keeps 1/C^3-type terms finite for extreme negative dependence.
constexpr double kCFloor = 1e-100;

double clamp01(double t) { return std::min(std::max(t, 1e-15), 1.0 - 1e-15); }

}  // namespace

CopulaTag copula_from_string(const std::string& name) {
  if (name == "normal" || name == "gaussian") return CopulaTag::Normal;
  if (name == "clayton") return CopulaTag::Clayton;
  if (name == "joe") return CopulaTag::Joe;
  if (name == "frank") return CopulaTag::Frank;
  if (name == "gumbel") return CopulaTag::Gumbel;
  if (name == "amh") return CopulaTag::AMH;
  throw std::invalid_argument("unknown copula family: " + name);
}

std::string copula_name(CopulaTag tag) {
  switch (tag) {
    case CopulaTag::Normal: return "normal";
    case CopulaTag::Clayton: return "clayton";
    case CopulaTag::Joe: return "joe";
    case CopulaTag::Frank: return "frank";
    case CopulaTag::Gumbel: return "gumbel";
    case CopulaTag::AMH: return "amh";
  }
  return "?";
}

void check_theta(const CopulaFamily& fam) {
  const double th = fam.theta;
  bool ok = false;
  switch (fam.tag) {
    case CopulaTag::Normal: ok = th > -1.0 && th < 1.0; break;
    case CopulaTag::Clayton: ok = th > 0.0; break;
    case CopulaTag::Joe: ok = th > 1.0; break;
    case CopulaTag::Frank: ok = th != 0.0; break;
    case CopulaTag::Gumbel: ok = th >= 1.0; break;
    case CopulaTag::AMH: ok = th >= -1.0 && th <= 1.0; break;
  }
  if (!ok)
    throw std::domain_error("theta " + std::to_string(th) +
                            " outside range of " + copula_name(fam.tag));
}

double generator(const CopulaFamily& fam, double t) {
  const double th = fam.theta;
  switch (fam.tag) {
    case CopulaTag::Clayton: return (std::pow(t, -th) - 1.0) / th;
    case CopulaTag::Gumbel: return std::pow(-std::log(t), th);
    case CopulaTag::Frank:
      return -std::log(std::expm1(-th * t) / std::expm1(-th));
    case CopulaTag::Joe: return -std::log(1.0 - std::pow(1.0 - t, th));
    case CopulaTag::AMH: return std::log((1.0 - th * (1.0 - t)) / t);
    case CopulaTag::Normal: break;
  }
  throw std::invalid_argument("generator: not an Archimedean family");
}

double generator_inverse(const CopulaFamily& fam, double w) {
  const double th = fam.theta;
  switch (fam.tag) {
    case CopulaTag::Clayton: return std::pow(1.0 + th * w, -1.0 / th);
    case CopulaTag::Gumbel: return std::exp(-std::pow(w, 1.0 / th));
    case CopulaTag::Frank:
      return -std::log1p(std::exp(-w) * std::expm1(-th)) / th;
    case CopulaTag::Joe:
      return 1.0 - std::pow(-std::expm1(-w), 1.0 / th);
    case CopulaTag::AMH: return (1.0 - th) / (std::exp(w) - th);
    case CopulaTag::Normal: break;
  }
  throw std::invalid_argument("generator_inverse: not an Archimedean family");
}

GenPartials generator_partials(const CopulaFamily& fam, double t) {
  GenPartials p;
  const double th = fam.theta;
  switch (fam.tag) {
    case CopulaTag::Clayton: {
      const double lt = std::log(t);
      const double tm = std::pow(t, -th);        // t^-theta
      const double tm1 = tm / t;                 // t^{-theta-1}
      const double tm2 = tm1 / t;
      const double tm3 = tm2 / t;
      p.g = (tm - 1.0) / th;
      p.g1 = -tm1;
      p.g2 = (th + 1.0) * tm2;
      p.g3 = -(th + 1.0) * (th + 2.0) * tm3;
      p.gth = -tm * lt / th - (tm - 1.0) / (th * th);
      p.g1th = tm1 * lt;
      p.g2th = tm2 * (1.0 - (th + 1.0) * lt);
      p.gthth = tm * lt * lt / th + 2.0 * tm * lt / (th * th) +
                2.0 * (tm - 1.0) / (th * th * th);
      p.g1thth = -tm1 * lt * lt;
      return p;
    }
    case CopulaTag::Gumbel: {
      const double L = -std::log(t);
      const double lL = std::log(L);
      const double Lm1 = std::pow(L, th - 1.0);  // L^{theta-1}
      const double Lth = Lm1 * L;
      const double Lm2 = Lm1 / L;
      const double Lm3 = Lm2 / L;
      const double t2 = t * t;
      p.g = Lth;
      p.g1 = -th * Lm1 / t;
      p.g2 = th * ((th - 1.0) * Lm2 + Lm1) / t2;
      p.g3 = -th * ((th - 1.0) * (th - 2.0) * Lm3 + 3.0 * (th - 1.0) * Lm2 + 2.0 * Lm1) / (t2 * t);
      p.gth = Lth * lL;
      p.g1th = -Lm1 * (1.0 + th * lL) / t;
      p.g2th = ((2.0 * th - 1.0) * Lm2 + Lm1 + th * (th - 1.0) * Lm2 * lL + th * Lm1 * lL) / t2;
      p.gthth = Lth * lL * lL;
      p.g1thth = -Lm1 * lL * (2.0 + th * lL) / t;
      return p;
    }
    case CopulaTag::Frank: {
      const double et = std::exp(-th * t);
      const double E = std::expm1(-th * t);
      const double D = std::expm1(-th);
      const double eth = std::exp(-th);
      const double E2 = E * E;
      p.g = -std::log(E / D);
      p.g1 = th * et / E;
      p.g2 = th * th * et / E2;
      p.g3 = th * th * th * et * (et + 1.0) / (E2 * E);
      p.gth = t * et / E - eth / D;
      p.g1th = et * (1.0 - th * t) / E + th * t * et * et / E2;
      p.g2th = th * et * (2.0 - th * t) / E2 + 2.0 * th * th * t * et * et / (E2 * E);
      p.gthth = t * t * et / E2 - eth / (D * D);
      p.g1thth = -t * et * (2.0 - th * t) / E + t * et * et * (2.0 - 3.0 * th * t) / E2 +
                 2.0 * th * t * t * et * et * et / (E2 * E);
      return p;
    }
    case CopulaTag::Joe: {
      const double s = 1.0 - t;
      const double ls = std::log(s);
      const double sm1 = std::pow(s, th - 1.0);  // s^{theta-1}
      const double sth = sm1 * s;
      const double sm2 = sm1 / s;
      const double sm3 = sm2 / s;
      const double R = 1.0 - sth;
      const double R2 = R * R;
      p.g = -std::log1p(-sth);
      p.g1 = -th * sm1 / R;
      p.g2 = th * (th - 1.0) * sm2 / R + th * th * sm1 * sm1 / R2;
      p.g3 = -th * (th - 1.0) * (th - 2.0) * sm3 / R - 3.0 * th * th * (th - 1.0) * sm1 * sm2 / R2 -
             2.0 * th * th * th * sm1 * sm1 * sm1 / (R2 * R);
      p.gth = sth * ls / R;
      p.g1th = -sm1 * (1.0 + th * ls) / R - th * sth * sm1 * ls / R2;
      p.g2th = ((2.0 * th - 1.0) + th * (th - 1.0) * ls) * sm2 / R +
               (2.0 * th + th * (3.0 * th - 1.0) * ls) * sm1 * sm1 / R2 +
               2.0 * th * th * sth * sm1 * sm1 * ls / (R2 * R);
      p.gthth = sth * ls * ls / R + sth * sth * ls * ls / R2;
      p.g1thth = -sm1 * ls * (2.0 + th * ls) / R - sth * sm1 * ls * (2.0 + 3.0 * th * ls) / R2 -
                 2.0 * th * sth * sth * sm1 * ls * ls / (R2 * R);
      return p;
    }
    case CopulaTag::AMH: {
      const double N = 1.0 - th * (1.0 - t);
      const double N2 = N * N;
      const double tm1 = t - 1.0;
      p.g = std::log(N / t);
      p.g1 = th / N - 1.0 / t;
      p.g2 = -th * th / N2 + 1.0 / (t * t);
      p.g3 = 2.0 * th * th * th / (N2 * N) - 2.0 / (t * t * t);
      p.gth = tm1 / N;
      p.g1th = 1.0 / N2;
      p.g2th = -2.0 * th / N2 + 2.0 * th * th * tm1 / (N2 * N);
      p.gthth = -tm1 * tm1 / N2;
      p.g1thth = -2.0 * tm1 / (N2 * N);
      return p;
    }
    case CopulaTag::Normal: break;
  }
  throw std::invalid_argument("generator_partials: not an Archimedean family");
}

double copula_cdf(const CopulaFamily& fam, double u, double v) {
  const double th = fam.theta;
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0 && v >= 1.0) return 1.0;
  if (u >= 1.0) return v;
  if (v >= 1.0) return u;
  switch (fam.tag) {
    case CopulaTag::Normal:
      return bvn_cdf(norm_quantile(u), norm_quantile(v), th);
    case CopulaTag::Clayton: {
      // log-sum-exp over u^-theta + v^-theta - 1
      const double A = -th * std::log(u), B = -th * std::log(v);
      const double M = std::max(A, B);
      const double ls = M + std::log(std::exp(A - M) + std::exp(B - M) - std::exp(-M));
      return std::exp(-ls / th);
    }
    case CopulaTag::Gumbel: {
      const double la = th * std::log(-std::log(u));
      const double lb = th * std::log(-std::log(v));
      const double M = std::max(la, lb);
      const double ls = M + std::log1p(std::exp(std::min(la, lb) - M));
      return std::exp(-std::exp(ls / th));
    }
    case CopulaTag::Frank:
      return -std::log1p(std::expm1(-th * u) * std::expm1(-th * v) / std::expm1(-th)) / th;
    case CopulaTag::Joe: {
      const double su = std::pow(1.0 - u, th), sv = std::pow(1.0 - v, th);
      const double P = su + sv - su * sv;
      return 1.0 - std::pow(P, 1.0 / th);
    }
    case CopulaTag::AMH:
      return u * v / (1.0 - th * (1.0 - u) * (1.0 - v));
  }
  return 0.0;
}

namespace {

// Derivatives of the Normal copula in closed form via the conditional
// representation C_v = Phi((x - rho y)/s), x = qnorm(u), y = qnorm(v).
CopulaDerivs normal_derivs(double rho, double u, double v) {
  CopulaDerivs d;
  const double x = norm_quantile(u), y = norm_quantile(v);
  const double s2 = 1.0 - rho * rho;
  const double s = std::sqrt(s2);
  const double q = (x - rho * y) / s;   // C_v = Phi(q)
  const double qu = (y - rho * x) / s;  // C_u = Phi(qu)
  const double fx = norm_pdf(x), fy = norm_pdf(y), fq = norm_pdf(q);
  d.c = bvn_cdf(x, y, rho);
  d.du = norm_cdf(qu);
  d.dv = norm_cdf(q);
  d.duv = fq / (s * fx);
  d.dvv = -rho * fq / (s * fy);
  d.duuv = fq * (x - q / s) / (s * fx * fx);
  d.duvv = rho * q * fq / (s2 * fx * fy);
  d.dvvv = -rho * fq * (rho * q / s + y) / (s * fy * fy);
  d.dtheta = bvn_pdf(x, y, rho);
  const double w = rho * x - y;
  d.dtheta_dv = fq * w / (s2 * s);
  d.dtheta_dvv = fq * (rho * q * w / s - 1.0) / (s2 * s * fy);
  d.dtheta_duv = fq * (rho - q * w / s) / (s2 * s * fx);
  d.dtheta2_dv = fq * (x / (s2 * s) + 3.0 * rho * w / (s2 * s2 * s) - q * w * w / (s2 * s2 * s2));
  return d;
}

}  // namespace

CopulaDerivs copula_derivs(const CopulaFamily& fam, double u, double v) {
  u = clamp01(u);
  v = clamp01(v);
  if (fam.tag == CopulaTag::Normal) return normal_derivs(fam.theta, u, v);

  CopulaDerivs d;
  const double C = std::max(copula_cdf(fam, u, v), kCFloor);
  const GenPartials pu = generator_partials(fam, u);
  const GenPartials pv = generator_partials(fam, v);
  const GenPartials pc = generator_partials(fam, C);
  const double A = pc.g1;

  d.c = C;
  const double Cu = pu.g1 / A;
  const double Cv = pv.g1 / A;
  d.du = Cu;
  d.dv = Cv;
  d.duv = -pc.g2 * Cu * Cv / A;
  d.dvv = (pv.g2 - pc.g2 * Cv * Cv) / A;
  const double Cuu = (pu.g2 - pc.g2 * Cu * Cu) / A;
  d.dvvv = (pv.g3 - pc.g3 * Cv * Cv * Cv - 3.0 * pc.g2 * Cv * d.dvv) / A;
  d.duvv = -(pc.g3 * Cu * Cv * Cv + 2.0 * pc.g2 * Cv * d.duv + pc.g2 * Cu * d.dvv) / A;
  d.duuv = -(pc.g3 * Cv * Cu * Cu + 2.0 * pc.g2 * Cu * d.duv + pc.g2 * Cv * Cuu) / A;

  const double Cth = (pu.gth + pv.gth - pc.gth) / A;
  d.dtheta = Cth;
  // B = d/dtheta of g1 along (C(theta), theta)
  const double B = pc.g2 * Cth + pc.g1th;
  const double Cthv = (pv.g1th - B * Cv) / A;
  const double Cthu = (pu.g1th - B * Cu) / A;
  d.dtheta_dv = Cthv;
  const double Cthth = (pu.gthth + pv.gthth - pc.gthth - pc.g2 * Cth * Cth - 2.0 * pc.g1th * Cth) / A;
  const double Bth = pc.g3 * Cth + pc.g2th;  // d/dtheta of g2 along the path
  d.dtheta_dvv = (pv.g2th - Bth * Cv * Cv - 2.0 * pc.g2 * Cv * Cthv - B * d.dvv) / A;
  d.dtheta_duv = -(Bth * Cu * Cv + pc.g2 * (Cthu * Cv + Cu * Cthv) + B * d.duv) / A;
  d.dtheta2_dv = (pv.g1thth -
                  (pc.g3 * Cth * Cth + 2.0 * pc.g2th * Cth + pc.g2 * Cthth + pc.g1thth) * Cv -
                  2.0 * B * Cthv) / A;
  return d;
}

double kendall_tau_numeric(const CopulaFamily& fam) {
  check_theta(fam);
  auto f = [&](double t) {
    const GenPartials p = generator_partials(fam, t);
    return p.g / p.g1;
  };
  const double eps = 1e-10;
  return 1.0 + 4.0 * integrate(f, eps, 1.0 - eps, 1e-10);
}

double kendall_tau(const CopulaFamily& fam) {
  check_theta(fam);
  const double th = fam.theta;
  switch (fam.tag) {
    case CopulaTag::Normal: return 2.0 * std::asin(th) / M_PI;
    case CopulaTag::Clayton: return th / (th + 2.0);
    case CopulaTag::Gumbel: return 1.0 - 1.0 / th;
    case CopulaTag::Frank: {
      const double a = std::fabs(th);
      const double t = 1.0 - 4.0 / a * (1.0 - debye1(a));
      return th > 0 ? t : -t;
    }
    case CopulaTag::Joe:
    case CopulaTag::AMH: return kendall_tau_numeric(fam);
  }
  return 0.0;
}

namespace {

double bisect_tau(CopulaTag tag, double target, double lo, double hi) {
  auto tau_at = [&](double th) { return kendall_tau({tag, th}); };
  double flo = tau_at(lo) - target, fhi = tau_at(hi) - target;
  if (flo * fhi > 0.0)
    throw std::domain_error("tau " + std::to_string(target) +
                            " not attainable by " + copula_name(tag));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = tau_at(mid) - target;
    if (fm == 0.0 || hi - lo < 1e-8 * (1.0 + std::fabs(mid))) return mid;
    if (flo * fm <= 0.0) { hi = mid; fhi = fm; } else { lo = mid; flo = fm; }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double tau_to_theta(CopulaTag tag, double tau) {
  switch (tag) {
    case CopulaTag::Normal:
      if (!(tau > -1.0 && tau < 1.0)) throw std::domain_error("tau outside (-1,1)");
      return std::sin(0.5 * M_PI * tau);
    case CopulaTag::Clayton:
      if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau outside (0,1) for clayton");
      return 2.0 * tau / (1.0 - tau);
    case CopulaTag::Gumbel:
      if (!(tau >= 0.0 && tau < 1.0)) throw std::domain_error("tau outside [0,1) for gumbel");
      return 1.0 / (1.0 - tau);
    case CopulaTag::Frank: {
      if (!(tau > -1.0 && tau < 1.0) || tau == 0.0)
        throw std::domain_error("tau outside (-1,1)\\{0} for frank");
      const double th = bisect_tau(CopulaTag::Frank, std::fabs(tau), 1e-6, 500.0);
      return tau > 0 ? th : -th;
    }
    case CopulaTag::Joe:
      if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau outside (0,1) for joe");
      return bisect_tau(CopulaTag::Joe, tau, 1.0 + 1e-9, 1000.0);
    case CopulaTag::AMH:
      return bisect_tau(CopulaTag::AMH, tau, -1.0 + 1e-12, 1.0 - 1e-9);
  }
  throw std::invalid_argument("tau_to_theta: bad family");
}

double theta_to_unconstrained(CopulaTag tag, double theta) {
  switch (tag) {
    case CopulaTag::Normal:
    case CopulaTag::AMH: return std::atanh(std::clamp(theta, -1.0 + 1e-12, 1.0 - 1e-12));
    case CopulaTag::Clayton: return std::log(theta);
    case CopulaTag::Joe:
    case CopulaTag::Gumbel: return std::log(std::max(theta - 1.0, 1e-10));
    case CopulaTag::Frank: return theta;
  }
  return theta;
}

double theta_from_unconstrained(CopulaTag tag, double t) {
  switch (tag) {
    case CopulaTag::Normal:
    case CopulaTag::AMH: return std::tanh(t);
    case CopulaTag::Clayton: return std::exp(t);
    case CopulaTag::Joe:
    case CopulaTag::Gumbel: return 1.0 + std::exp(t);
    case CopulaTag::Frank:
      if (std::fabs(t) < 1e-6) return t >= 0.0 ? 1e-6 : -1e-6;
      return t;
  }
  return t;
}

std::pair<double, double> theta_link_derivs(CopulaTag tag, double t) {
  switch (tag) {
    case CopulaTag::Normal:
    case CopulaTag::AMH: {
      const double th = std::tanh(t);
      const double d1 = 1.0 - th * th;
      return {d1, -2.0 * th * d1};
    }
    case CopulaTag::Clayton: {
      const double e = std::exp(t);
      return {e, e};
    }
    case CopulaTag::Joe:
    case CopulaTag::Gumbel: {
      const double e = std::exp(t);
      return {e, e};
    }
    case CopulaTag::Frank: return {1.0, 0.0};
  }
  return {1.0, 0.0};
}

double theta_start(CopulaTag tag) {
  switch (tag) {
    case CopulaTag::Normal:
    case CopulaTag::AMH: return 0.0;
    case CopulaTag::Clayton: return 0.05;
    case CopulaTag::Joe:
    case CopulaTag::Gumbel: return 1.05;
    case CopulaTag::Frank: return 1e-6;
  }
  return 0.0;
}

double conditional_cdf(const CopulaFamily& fam, double u, double v) {
  u = clamp01(u);
  v = clamp01(v);
  if (fam.tag == CopulaTag::Normal) {
    const double rho = fam.theta;
    const double s = std::sqrt(1.0 - rho * rho);
    return norm_cdf((norm_quantile(v) - rho * norm_quantile(u)) / s);
  }
  const double C = std::max(copula_cdf(fam, u, v), kCFloor);
  return generator_partials(fam, u).g1 / generator_partials(fam, C).g1;
}

double conditional_quantile(const CopulaFamily& fam, double u, double p) {
  u = clamp01(u);
  if (fam.tag == CopulaTag::Normal) {
    const double rho = fam.theta;
    const double s = std::sqrt(1.0 - rho * rho);
    return norm_cdf(rho * norm_quantile(u) + s * norm_quantile(p));
  }
  double lo = 1e-13, hi = 1.0 - 1e-13;
  if (p <= conditional_cdf(fam, u, lo)) return lo;
  if (p >= conditional_cdf(fam, u, hi)) return hi;
  double v = 0.5;
  for (int it = 0; it < 100; ++it) {
    const CopulaDerivs d = copula_derivs(fam, u, v);
    const double f = d.du - p;  // conditional cdf in v minus target
    if (f > 0.0) hi = v; else lo = v;
    double vn = (d.duv > 1e-300) ? v - f / d.duv : v;
    if (!(vn > lo && vn < hi)) vn = 0.5 * (lo + hi);
    if (std::fabs(vn - v) < 1e-13) return vn;
    v = vn;
  }
  return v;
}

std::pair<double, double> copula_sample(const CopulaFamily& fam, Rng& rng) {
  const double u = rng.uniform();
  const double p = rng.uniform();
  return {u, conditional_quantile(fam, u, p)};
}

std::pair<double, double> gumbel_sample_frailty(double theta, Rng& rng) {
  // Positive stable S with Laplace transform exp(-t^{1/theta}) by
  // Chambers-Mallows-Stuck, then U_j = exp(-(E_j/S)^{1/theta}).
  const double a = 1.0 / theta;
  const double tU = M_PI * rng.uniform();  // on (0, pi)
  const double W = rng.exponential();
  double S;
  if (theta <= 1.0 + 1e-12) {
    S = 1.0;  // degenerate: independence boundary
  } else {
    S = std::pow(std::sin((1.0 - a) * tU) / W, (1.0 - a) / a) *
        std::sin(a * tU) / std::pow(std::sin(tU), 1.0 / a);
  }
  const double e1 = rng.exponential();
  const double e2 = rng.exponential();
  const double u = std::exp(-std::pow(e1 / S, a));
  const double v = std::exp(-std::pow(e2 / S, a));
  return {clamp01(u), clamp01(v)};
}

}  // namespace gassm
