#include "gassm/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gassm {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log sqrt(2 pi)
}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Mills ratio R(y) = Phi(-y)/phi(y) for y > 0 via the Laplace continued
// fraction R = 1/(y + 1/(y + 2/(y + 3/(...)))), evaluated backwards.
static double mills_ratio_tail(double y) {
  double r = 0.0;
  for (int i = 64; i >= 1; --i) r = i / (y + r);
  return 1.0 / (y + r);
}

double norm_logcdf(double x) {
  if (x >= -8.0) return std::log(norm_cdf(x));
  // log Phi(x) = log phi(x) + log R(-x)
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_tail(-x));
}

double inv_mills(double u) {
  if (u >= -8.0) return norm_pdf(u) / norm_cdf(u);
  return 1.0 / mills_ratio_tail(-u);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
  const double q = std::min(p, 1.0 - p);
  // Abramowitz-Stegun 26.2.23 seed, then Halley steps on Phi(x) - q.
  const double t = std::sqrt(-2.0 * std::log(q));
  double x = -(t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t)));
  for (int it = 0; it < 4; ++it) {
    const double e = norm_cdf(x) - q;
    const double g = norm_pdf(x);
    const double d = e / g;
    x -= d / (1.0 + 0.5 * d * x);  // Halley correction, phi'/phi = -x
  }
  return (p < 0.5) ? x : -x;
}

// Asymptotic series with recurrence shift to x >= 10.
double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: x <= 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double i1 = 1.0 / x, i2 = i1 * i1;
  double s = std::log(x) - 0.5 * i1;
  s -= i2 * (1.0 / 12 - i2 * (1.0 / 120 - i2 * (1.0 / 252 - i2 * (1.0 / 240 - i2 * (1.0 / 132 - i2 * (691.0 / 32760))))));
  return s + acc;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("trigamma: x <= 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double i1 = 1.0 / x, i2 = i1 * i1;
  double s = i1 + 0.5 * i2;
  s += i1 * i2 * (1.0 / 6 - i2 * (1.0 / 30 - i2 * (1.0 / 42 - i2 * (1.0 / 30 - i2 * (5.0 / 66)))));
  return s + acc;
}

// Lower series for x < a+1, Lentz continued fraction for the upper tail.
double pgamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("pgamma: a <= 0");
  if (x < 0.0) throw std::domain_error("pgamma: x < 0");
  if (x == 0.0) return 0.0;
  const double lpre = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(lpre);
  }
  const double fpmin = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 3e-16) break;
  }
  const double q = std::exp(lpre) * h;
  return 1.0 - q;
}

double pgamma_dx(double a, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
}

// Shape derivatives by termwise differentiation of the everywhere-convergent
// positive series P = sum_j x^{a+j} e^{-x} / Gamma(a+j+1).  Digamma/trigamma
// of a+j+1 advance by recurrence so each term is O(1).
PgammaShapeDerivs pgamma_shape_derivs(double a, double x) {
  PgammaShapeDerivs out;
  if (x <= 0.0) return out;
  if (x > 200.0) {
    // Q is below ~1e-80 here for the shapes this package sees; leading-order
    // tail only, the values are numerically negligible.
    const double q = 1.0 - pgamma(a, x);
    const double lx = std::log(x);
    out.da = -q * (lx - digamma(a));
    out.daa = -q * ((lx - digamma(a)) * (lx - digamma(a)) - trigamma(a));
    return out;
  }
  const double lx = std::log(x);
  double t = std::exp(a * lx - x - std::lgamma(a + 1.0));
  double psi = digamma(a + 1.0);
  double psi1 = trigamma(a + 1.0);
  double sda = 0.0, sdaa = 0.0;
  for (int j = 0; j < 2000; ++j) {
    const double d = lx - psi;
    sda += t * d;
    sdaa += t * (d * d - psi1);
    const double anj = a + j + 1.0;
    t *= x / anj;
    psi += 1.0 / anj;
    psi1 -= 1.0 / (anj * anj);
    if (j > x - a && t * (2.0 + std::fabs(d)) < 1e-17 * (1.0 + std::fabs(sda) + std::fabs(sdaa))) break;
  }
  out.da = sda;
  out.daa = sdaa;
  return out;
}

double qgamma(double a, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("qgamma: p outside (0,1)");
  // Wilson-Hilferty seed.
  const double z = norm_quantile(p);
  const double c = 1.0 / (9.0 * a);
  double x = a * std::pow(1.0 - c + z * std::sqrt(c), 3);
  if (!(x > 0.0)) x = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);  // tiny-p branch
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const double f = pgamma(a, x) - p;
    if (f > 0.0) hi = x; else lo = x;
    const double g = pgamma_dx(a, x);
    double step = (g > 0.0) ? f / g : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
    if (std::fabs(xn - x) <= 1e-14 * (1.0 + x) && std::fabs(f) < 1e-12) { x = xn; break; }
    x = xn;
  }
  return x;
}

namespace {

struct GaussPair {
  GaussLegendre g7 = gauss_legendre(7);
  GaussLegendre g15 = gauss_legendre(15);
};

const GaussPair& gauss_pair() {
  static const GaussPair gp;
  return gp;
}

}  // namespace

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre: n < 1");
  GaussLegendre out;
  out.x.assign(n, 0.0);
  out.w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      // p0 = P_n(z); derivative from the recurrence.
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p0 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    out.x[i] = -z;
    out.x[n - 1 - i] = z;
    out.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    out.w[n - 1 - i] = out.w[i];
  }
  return out;
}

namespace {

void integrate_rec(const std::function<double(double)>& f, double a, double b,
                   double tol, int depth, double& acc) {
  const auto& gp = gauss_pair();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double i7 = 0.0, i15 = 0.0;
  for (int i = 0; i < 7; ++i) i7 += gp.g7.w[i] * f(c + h * gp.g7.x[i]);
  for (int i = 0; i < 15; ++i) i15 += gp.g15.w[i] * f(c + h * gp.g15.x[i]);
  i7 *= h;
  i15 *= h;
  if (depth >= 48 || std::fabs(i15 - i7) <= tol) {
    acc += i15;
    return;
  }
  integrate_rec(f, a, c, 0.5 * tol, depth + 1, acc);
  integrate_rec(f, c, b, 0.5 * tol, depth + 1, acc);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (a == b) return 0.0;
  double acc = 0.0;
  integrate_rec(f, a, b, tol, 0, acc);
  return acc;
}

double bvn_pdf(double x, double y, double rho) {
  const double s2 = 1.0 - rho * rho;
  const double q = (x * x - 2.0 * rho * x * y + y * y) / s2;
  return std::exp(-0.5 * q) / (2.0 * M_PI * std::sqrt(s2));
}

double bvn_cdf(double h, double k, double rho) {
  if (!(std::fabs(rho) < 1.0)) {
    if (rho >= 1.0) return norm_cdf(std::min(h, k));
    // rho = -1: mass on the antidiagonal
    return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  }
  if (h > 8.5) return norm_cdf(k);
  if (k > 8.5) return norm_cdf(h);
  if (h < -8.5 || k < -8.5) return 0.0;
  const double s = std::sqrt(1.0 - rho * rho);
  // Phi2(h,k) = int_{-inf}^h phi(x) Phi((k - rho x)/s) dx
  auto f = [&](double x) { return norm_pdf(x) * norm_cdf((k - rho * x) / s); };
  return integrate(f, -8.5, h, 1e-13);
}

double debye1(double x) {
  if (!(x > 0.0)) throw std::domain_error("debye1: x <= 0");
  if (x < 1e-6) return 1.0 - 0.25 * x + x * x / 36.0;
  auto f = [](double t) { return (t < 1e-12) ? 1.0 : t / std::expm1(t); };
  return integrate(f, 0.0, x, 1e-12) / x;
}

}  // namespace gassm
