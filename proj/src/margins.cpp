#include "gassm/margins.hpp"

#include <cmath>
#include <stdexcept>

#include "gassm/special.hpp"

namespace gassm {

MarginFamily margin_from_string(const std::string& name) {
  if (name == "gaussian" || name == "normal") return MarginFamily::Gaussian;
  if (name == "gamma") return MarginFamily::Gamma;
  throw std::invalid_argument("unknown margin family: " + name);
}

std::string margin_name(MarginFamily f) {
  return f == MarginFamily::Gaussian ? "gaussian" : "gamma";
}

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727;
}

MarginEval margin_eval(MarginFamily f, double y, double eta, double aux) {
  MarginEval m;
  if (f == MarginFamily::Gaussian) {
    const double sigma = std::exp(aux);
    const double t = (y - eta) / sigma;
    const double ft = norm_pdf(t);
    m.logpdf = -aux - 0.5 * t * t - kLogSqrt2Pi;
    m.dlogpdf_deta = t / sigma;
    m.d2logpdf_deta2 = -1.0 / (sigma * sigma);
    m.cdf = norm_cdf(t);
    m.dcdf_deta = -ft / sigma;
    m.d2cdf_deta2 = -t * ft / (sigma * sigma);
    m.dlogpdf_daux = t * t - 1.0;
    m.d2logpdf_daux2 = -2.0 * t * t;
    m.d2logpdf_detadaux = -2.0 * t / sigma;
    m.dcdf_daux = -t * ft;
    m.d2cdf_daux2 = t * ft * (1.0 - t * t);
    m.d2cdf_detadaux = ft * (1.0 - t * t) / sigma;
    return m;
  }
  // Gamma, log link: mu = e^eta, shape k = e^aux, x = k y e^{-eta}.
  if (!(y > 0.0)) throw std::domain_error("gamma margin needs y > 0");
  const double k = std::exp(aux);
  const double x = k * y * std::exp(-eta);
  const double ly = std::log(y);
  m.logpdf = k * (aux - eta) + (k - 1.0) * ly - x - std::lgamma(k);
  m.dlogpdf_deta = x - k;
  m.d2logpdf_deta2 = -x;
  m.cdf = pgamma(k, x);
  const double px = pgamma_dx(k, x);          // dP/dx
  const double pxx = px * ((k - 1.0) / x - 1.0);
  const double psik = digamma(k);
  const double pax = px * (std::log(x) - psik);
  const PgammaShapeDerivs ps = pgamma_shape_derivs(k, x);
  m.dcdf_deta = -x * px;
  m.d2cdf_deta2 = x * px * (k - x);
  const double dk = x / k;  // dx/dk = y e^{-eta}
  const double dPdk = ps.da + px * dk;
  m.dcdf_daux = k * dPdk;
  m.d2cdf_daux2 = k * k * (ps.daa + 2.0 * dk * pax + dk * dk * pxx) + k * dPdk;
  m.d2cdf_detadaux = -k * x * pax - x * x * pxx - x * px;
  const double dLdk = aux + 1.0 - eta + ly - dk - psik;  // note y e^{-eta} = x/k
  m.dlogpdf_daux = k * dLdk;
  m.d2logpdf_daux2 = k * k * (1.0 / k - trigamma(k)) + k * dLdk;
  m.d2logpdf_detadaux = x - k;
  return m;
}

double margin_logpdf(MarginFamily f, double y, double eta, double aux) {
  if (f == MarginFamily::Gaussian) {
    const double t = (y - eta) * std::exp(-aux);
    return -aux - 0.5 * t * t - kLogSqrt2Pi;
  }
  const double k = std::exp(aux);
  const double x = k * y * std::exp(-eta);
  return k * (aux - eta) + (k - 1.0) * std::log(y) - x - std::lgamma(k);
}

double margin_cdf(MarginFamily f, double y, double eta, double aux) {
  if (f == MarginFamily::Gaussian) return norm_cdf((y - eta) * std::exp(-aux));
  const double k = std::exp(aux);
  return pgamma(k, k * y * std::exp(-eta));
}

double margin_quantile(MarginFamily f, double u, double eta, double aux) {
  if (f == MarginFamily::Gaussian) return eta + std::exp(aux) * norm_quantile(u);
  const double k = std::exp(aux);
  return qgamma(k, u) * std::exp(eta) / k;
}

double margin_mean(MarginFamily f, double eta, double aux) {
  (void)aux;
  return f == MarginFamily::Gaussian ? eta : std::exp(eta);
}

double margin_deviance(MarginFamily f, double y, double eta, double aux) {
  if (f == MarginFamily::Gaussian) {
    const double t = (y - eta) * std::exp(-aux);
    return t * t;
  }
  const double k = std::exp(aux);
  const double mu = std::exp(eta);
  return 2.0 * k * ((y - mu) / mu - std::log(y / mu));
}

}  // namespace gassm
