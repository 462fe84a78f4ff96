#include "gassm/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "gassm/glm.hpp"
#include "gassm/rng.hpp"
#include "gassm/special.hpp"

namespace gassm {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTestSeedIndex = 1000000007ull;
}  // namespace

StudyKind study_from_string(const std::string& name) {
  if (name == "consistency") return StudyKind::Consistency;
  if (name == "logged") return StudyKind::Logged;
  throw std::invalid_argument("unknown study: " + name);
}

std::string study_name(StudyKind k) {
  return k == StudyKind::Consistency ? "consistency" : "logged";
}

double dgp_s1(double x) { return -0.2 * std::sin(M_PI * x / 46.0); }
double dgp_s2(double x) { return -0.0004 * (x + 0.01 * std::cbrt(x)); }
double dgp_s3(double x) { return 0.0006 * std::exp(0.1 * x); }
double dgp_s4(double x) { return 0.03 * x; }

double true_eta1(const DGPSpec& g, const Eigen::RowVectorXd& x) {
  if (g.which == StudyKind::Consistency)
    return g.a0 + dgp_s1(x[0]) + dgp_s2(x[1]) + g.a4 * x[3] + g.a5 * x[4];
  return g.lin_alpha[0] + g.lin_alpha[1] * x[0] + g.lin_alpha[2] * x[1] +
         g.lin_alpha[3] * x[2];
}

double true_eta2(const DGPSpec& g, const Eigen::RowVectorXd& x) {
  if (g.which == StudyKind::Consistency)
    return g.b0 + dgp_s3(x[0]) + dgp_s4(x[2]) + g.b4 * x[3] + g.b5 * x[4];
  return g.lin_beta[0] + g.lin_beta[1] * x[0] + g.lin_beta[2] * x[1];
}

Dataset generate(const DGPSpec& g) {
  check_theta(g.copula);
  Rng rng(g.seed);
  Dataset d;
  const Eigen::Index n = g.n;
  d.sel.resize(n);
  d.out.resize(n);

  if (g.which == StudyKind::Consistency) {
    d.names = {"x1", "x2", "x3", "x4", "x5"};
    d.xcov.resize(n, 5);
    const double laux = std::log(g.shape);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.xcov(i, 0) = rng.uniform(16.0, 66.0);
      d.xcov(i, 1) = rng.uniform(10.0, 70.0);
      d.xcov(i, 2) = rng.uniform(0.0, 20.0);
      d.xcov(i, 3) = rng.bernoulli(0.5);
      d.xcov(i, 4) = rng.bernoulli(0.5);
      const auto [u, v] = copula_sample(g.copula, rng);
      const double eta1 = true_eta1(g, d.xcov.row(i)) + g.sel_shift;
      const double y1s = eta1 + norm_quantile(u);
      d.sel[i] = y1s > 0.0 ? 1.0 : 0.0;
      d.out[i] = d.sel[i] == 1.0
                     ? margin_quantile(MarginFamily::Gamma, v,
                                       true_eta2(g, d.xcov.row(i)), laux)
                     : kNaN;
    }
    return d;
  }

  // Equicorrelated (0.5) trivariate normal scores; the first is dichotomised
  // through its cdf value, the other two mapped to uniforms.
  d.names = {"x1", "x2", "x3"};
  d.xcov.resize(n, 3);
  Eigen::Matrix3d S;
  S << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
  const Eigen::Matrix3d L = S.llt().matrixL();
  const double laux = std::log(g.shape);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d w(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector3d z = L * w;
    d.xcov(i, 0) = norm_cdf(z[0]) > 0.5 ? 1.0 : 0.0;
    d.xcov(i, 1) = norm_cdf(z[1]);
    d.xcov(i, 2) = norm_cdf(z[2]);
    const auto [u, v] = copula_sample(g.copula, rng);
    const double eta1 = true_eta1(g, d.xcov.row(i)) + g.sel_shift;
    const double y1s = eta1 + norm_quantile(u);
    d.sel[i] = y1s > 0.0 ? 1.0 : 0.0;
    d.out[i] = d.sel[i] == 1.0
                   ? margin_quantile(MarginFamily::Gamma, v,
                                     true_eta2(g, d.xcov.row(i)), laux)
                   : kNaN;
  }
  return d;
}

std::string estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Gassm: return "gassm";
    case EstimatorKind::Gam: return "gam";
    case EstimatorKind::Logged: return "logged";
    case EstimatorKind::Degenerate: return "degenerate";
  }
  return "?";
}

ModelSpec study_model_spec(const DGPSpec& g, EstimatorKind kind) {
  ModelSpec s;
  if (g.which == StudyKind::Consistency) {
    s.sel_terms = {{"x1", true}, {"x2", true}, {"x4", false}, {"x5", false}};
    s.out_terms = {{"x1", true}, {"x3", true}, {"x4", false}, {"x5", false}};
    s.copula = g.copula.tag;
  } else {
    s.sel_terms = {{"x1", false}, {"x2", false}, {"x3", false}};
    s.out_terms = {{"x1", false}, {"x2", false}};
    s.copula = g.copula.tag;
  }
  s.margin = MarginFamily::Gamma;
  s.estimate_aux = true;
  if (kind == EstimatorKind::Logged) {
    s.margin = MarginFamily::Gaussian;
    s.copula = CopulaTag::Normal;
  }
  return s;
}

namespace {

// Truths reported for one estimator in one study.
std::vector<std::pair<std::string, double>> param_list(const DGPSpec& g,
                                                       EstimatorKind kind) {
  const double tau = kendall_tau(g.copula);
  std::vector<std::pair<std::string, double>> p;
  if (g.which == StudyKind::Consistency) {
    p.push_back({"b4", g.b4});
    p.push_back({"b5", g.b5});
    if (kind == EstimatorKind::Gassm || kind == EstimatorKind::Logged)
      p.push_back({"tau", tau});
    if (kind == EstimatorKind::Gassm || kind == EstimatorKind::Gam)
      p.push_back({"shape", g.shape});
  } else {
    p.push_back({"b0", g.lin_beta[0]});
    p.push_back({"b1", g.lin_beta[1]});
    p.push_back({"b2", g.lin_beta[2]});
    if (kind != EstimatorKind::Gam && kind != EstimatorKind::Degenerate)
      p.push_back({"tau", tau});
    if (kind == EstimatorKind::Gassm || kind == EstimatorKind::Gam)
      p.push_back({"shape", g.shape});
  }
  return p;
}

double linear_coef(const EqDesign& d, const Eigen::VectorXd& coef,
                   const std::string& col) {
  for (const auto& t : d.terms)
    if (!t.smooth && t.column == col) return coef[t.offset];
  throw std::invalid_argument("no linear term " + col);
}

// True outcome smooth for a covariate column of the consistency study.
double true_outcome_smooth(const std::string& col, double x) {
  if (col == "x1") return dgp_s3(x);
  if (col == "x3") return dgp_s4(x);
  throw std::invalid_argument("no outcome smooth for " + col);
}

struct RepResult {
  bool ok = false;
  std::vector<double> params;
  std::vector<double> ise;
  double eta2_mse = kNaN;
  double test_error = kNaN;
};

// Grid-centered integrated squared error of one fitted outcome smooth.
double smooth_ise(const TermLayout& t, const Eigen::VectorXd& gamma) {
  const int G = 200;
  Eigen::VectorXd fhat(G), ftru(G);
  for (int j = 0; j < G; ++j) {
    const double x = t.lo + (t.hi - t.lo) * j / (G - 1.0);
    fhat[j] = smooth_value(t, x, gamma);
    ftru[j] = true_outcome_smooth(t.column, x);
  }
  fhat.array() -= fhat.mean();
  ftru.array() -= ftru.mean();
  return (t.hi - t.lo) * (fhat - ftru).squaredNorm() / G;
}

// Shared evaluation grid for the outcome predictor in the consistency study.
Eigen::MatrixXd eta2_grid(const DGPSpec& g) {
  if (g.which != StudyKind::Consistency) return Eigen::MatrixXd();
  const int G = 64;
  Eigen::MatrixXd X(G, 5);
  for (int j = 0; j < G; ++j) {
    const double u = (j + 0.5) / G;
    X(j, 0) = 16.0 + 50.0 * u;
    X(j, 1) = 10.0 + 60.0 * u;
    X(j, 2) = 20.0 * u;
    X(j, 3) = j % 2;
    X(j, 4) = (j / 2) % 2;
  }
  return X;
}

struct EstimatorContext {
  EstimatorKind kind;
  ModelSpec spec;
  std::vector<std::pair<std::string, double>> params;
};

// Mean outcome deviance of a fitted outcome equation on the test set; for
// the Logged estimator the outcome is evaluated on the log scale.
double test_deviance(const Dataset& test, const FittedModel& fm) {
  const auto cols = [&] {
    std::vector<int> c;
    for (const auto& t : fm.design.eq2.terms)
      for (size_t j = 0; j < fm.names.size(); ++j)
        if (fm.names[j] == t.column) c.push_back(static_cast<int>(j));
    return c;
  }();
  Eigen::RowVectorXd r(fm.design.eq2.dim);
  const double laux = std::log(fm.aux);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    design_row(fm.design.eq2.terms, test.xcov.row(i), cols, r);
    const double eta = r * fm.beta;
    const double y = fm.spec.margin == MarginFamily::Gaussian
                         ? std::log(test.out[i])
                         : test.out[i];
    acc += margin_deviance(fm.spec.margin, y, eta, laux);
  }
  return acc / static_cast<double>(test.n());
}

RepResult run_selection_estimator(const EstimatorContext& ctx,
                                  const Dataset& train, const Dataset& test,
                                  const DGPSpec& g, const Eigen::MatrixXd& grid) {
  Dataset work = train;
  if (ctx.kind == EstimatorKind::Logged)
    for (Eigen::Index i = 0; i < work.n(); ++i)
      if (work.sel[i] == 1.0) work.out[i] = std::log(work.out[i]);

  FittedModel fm = fit_model(work, ctx.spec);

  RepResult r;
  r.params.reserve(ctx.params.size());
  for (const auto& [name, truth] : ctx.params) {
    (void)truth;
    double v;
    if (name == "tau") v = fm.tau;
    else if (name == "shape") v = fm.aux;
    else if (name == "b0") v = fm.beta[0];
    else if (name == "b1") v = linear_coef(fm.design.eq2, fm.beta, "x1");
    else if (name == "b2") v = linear_coef(fm.design.eq2, fm.beta, "x2");
    else if (name == "b4") v = linear_coef(fm.design.eq2, fm.beta, "x4");
    else v = linear_coef(fm.design.eq2, fm.beta, "x5");
    if (!std::isfinite(v)) return r;
    r.params.push_back(v);
  }

  if (g.which == StudyKind::Consistency) {
    for (const auto& t : fm.design.eq2.terms)
      if (t.smooth)
        r.ise.push_back(smooth_ise(t, fm.beta.segment(t.offset, t.size)));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < grid.rows(); ++j) {
      double e1, e2;
      predict_eta(fm, grid.row(j), e1, e2);
      const double diff = e2 - true_eta2(g, grid.row(j));
      acc += diff * diff;
    }
    r.eta2_mse = acc / static_cast<double>(grid.rows());
    if (!std::isfinite(r.eta2_mse)) return r;
  }
  r.test_error = test_deviance(test, fm);
  r.ok = std::isfinite(r.test_error);
  return r;
}

RepResult run_gam_estimator(const EstimatorContext& ctx, const Dataset& train,
                            const Dataset& test, const DGPSpec& g,
                            const Eigen::MatrixXd& grid) {
  const DesignBlocks design = build_design(train, ctx.spec);
  Eigen::VectorXd yc = train.out;
  for (Eigen::Index i = 0; i < train.n(); ++i)
    if (train.sel[i] == 0.0) yc[i] = 0.0;
  GlmFit glm =
      fit_glm(design.eq2, yc, train.sel, GlmFamily::Gamma, true, 0.0, 0.0);

  RepResult r;
  for (const auto& [name, truth] : ctx.params) {
    (void)truth;
    double v;
    if (name == "shape") v = std::exp(glm.aux);
    else if (name == "b0") v = glm.coef[0];
    else if (name == "b1") v = linear_coef(design.eq2, glm.coef, "x1");
    else if (name == "b2") v = linear_coef(design.eq2, glm.coef, "x2");
    else if (name == "b4") v = linear_coef(design.eq2, glm.coef, "x4");
    else v = linear_coef(design.eq2, glm.coef, "x5");
    if (!std::isfinite(v)) return r;
    r.params.push_back(v);
  }

  const auto cols = [&] {
    std::vector<int> c;
    for (const auto& t : design.eq2.terms)
      for (size_t j = 0; j < train.names.size(); ++j)
        if (train.names[j] == t.column) c.push_back(static_cast<int>(j));
    return c;
  }();
  Eigen::RowVectorXd row(design.eq2.dim);
  if (g.which == StudyKind::Consistency) {
    for (const auto& t : design.eq2.terms)
      if (t.smooth)
        r.ise.push_back(smooth_ise(t, glm.coef.segment(t.offset, t.size)));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < grid.rows(); ++j) {
      design_row(design.eq2.terms, grid.row(j), cols, row);
      const double diff = row * glm.coef - true_eta2(g, grid.row(j));
      acc += diff * diff;
    }
    r.eta2_mse = acc / static_cast<double>(grid.rows());
    if (!std::isfinite(r.eta2_mse)) return r;
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    design_row(design.eq2.terms, test.xcov.row(i), cols, row);
    acc += margin_deviance(MarginFamily::Gamma, test.out[i],
                           (row * glm.coef)(0), glm.aux);
  }
  r.test_error = acc / static_cast<double>(test.n());
  r.ok = std::isfinite(r.test_error);
  return r;
}

RepResult run_degenerate(const EstimatorContext& ctx) {
  RepResult r;
  for (const auto& [name, truth] : ctx.params) {
    (void)name;
    r.params.push_back(truth + 0.25);
  }
  r.eta2_mse = 0.0;
  r.test_error = 0.0;
  r.ok = true;
  return r;
}

}  // namespace

MCReport mc_study(const DGPSpec& dgp, const std::vector<EstimatorKind>& kinds,
                  int reps, std::uint64_t seed, int threads) {
  if (reps < 1) throw std::invalid_argument("mc_study: reps must be >= 1");
  MCReport rep;
  rep.dgp = dgp;
  rep.reps = reps;
  rep.seed = seed;

  std::vector<EstimatorContext> ctx;
  for (EstimatorKind k : kinds)
    ctx.push_back({k, study_model_spec(dgp, k), param_list(dgp, k)});

  DGPSpec tspec = dgp;
  tspec.seed = derive_seed(seed, kTestSeedIndex);
  tspec.sel_shift = 1e6;  // fully observed
  const Dataset test = generate(tspec);
  const Eigen::MatrixXd grid = eta2_grid(dgp);

  std::vector<std::vector<RepResult>> results(
      kinds.size(), std::vector<RepResult>(reps));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      DGPSpec rspec = dgp;
      rspec.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
      const Dataset train = generate(rspec);
      for (size_t e = 0; e < ctx.size(); ++e) {
        try {
          if (ctx[e].kind == EstimatorKind::Degenerate)
            results[e][r] = run_degenerate(ctx[e]);
          else if (ctx[e].kind == EstimatorKind::Gam)
            results[e][r] = run_gam_estimator(ctx[e], train, test, dgp, grid);
          else
            results[e][r] =
                run_selection_estimator(ctx[e], train, test, dgp, grid);
        } catch (const std::exception&) {
          results[e][r] = RepResult{};
        }
      }
    }
  };
  const int nt = std::max(1, threads);
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t e = 0; e < ctx.size(); ++e) {
    EstimatorSummary s;
    s.kind = ctx[e].kind;
    std::vector<const RepResult*> ok;
    for (const auto& rr : results[e])
      if (rr.ok) ok.push_back(&rr);
    s.n_ok = static_cast<int>(ok.size());
    s.n_fail = reps - s.n_ok;

    const size_t np = ctx[e].params.size();
    for (size_t k = 0; k < np; ++k) {
      ParamStat p;
      p.name = ctx[e].params[k].first;
      p.truth = ctx[e].params[k].second;
      if (s.n_ok == 0) {
        p.mean = p.sd = p.rel_bias_pct = p.rmse = kNaN;
      } else {
        double m = 0.0, sq = 0.0;
        for (const auto* rr : ok) {
          m += rr->params[k];
          sq += std::pow(rr->params[k] - p.truth, 2);
        }
        m /= s.n_ok;
        p.mean = m;
        p.rmse = std::sqrt(sq / s.n_ok);
        p.rel_bias_pct = 100.0 * (m - p.truth) / p.truth;
        if (s.n_ok < 2) {
          p.sd = kNaN;
        } else {
          double v = 0.0;
          for (const auto* rr : ok) v += std::pow(rr->params[k] - m, 2);
          p.sd = std::sqrt(v / s.n_ok);
        }
      }
      s.params.push_back(std::move(p));
    }

    if (!ok.empty() && !ok.front()->ise.empty()) {
      size_t si = 0;
      for (const auto& t : build_design(test, ctx[e].spec).eq2.terms) {
        if (!t.smooth) continue;
        SmoothStat st;
        st.column = t.column;
        double m = 0.0;
        for (const auto* rr : ok) m += rr->ise[si];
        st.mise = m / s.n_ok;
        s.smooths.push_back(std::move(st));
        ++si;
      }
    }
    double te = 0.0, e2 = 0.0;
    int nte = 0, ne2 = 0;
    for (const auto* rr : ok) {
      if (std::isfinite(rr->test_error)) te += rr->test_error, ++nte;
      if (std::isfinite(rr->eta2_mse)) e2 += rr->eta2_mse, ++ne2;
    }
    s.test_error = nte ? te / nte : kNaN;
    s.eta2_mse = ne2 ? e2 / ne2 : kNaN;
    rep.estimators.push_back(std::move(s));
  }
  return rep;
}

}  // namespace gassm
