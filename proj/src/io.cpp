#include "gassm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gassm/splines.hpp"

namespace gassm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "nan" ||
         cell == "NaN";
}

double parse_num(const std::string& cell, Eigen::Index row,
                 const std::string& col) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
    throw std::invalid_argument("csv row " + std::to_string(row) +
                                ", column " + col + ": bad value '" + cell +
                                "'");
  return v;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[i] = j[i].is_null() ? kNaN : j[i].get<double>();
  return v;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(std::move(row));
  }
  return j;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  const Eigen::Index r = j.size();
  if (r == 0) return Eigen::MatrixXd();
  const Eigen::Index c = j[0].size();
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

double num_or_nan(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || j[key].is_null()) return kNaN;
  return j[key].get<double>();
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset read_csv(const std::string& path, const std::string& sel_col,
                 const std::string& out_col) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(path + ": empty file");
  const auto header = split_csv_line(line);
  int si = -1, oi = -1;
  std::vector<std::string> names;
  std::vector<int> cov_idx;
  for (size_t j = 0; j < header.size(); ++j) {
    if (header[j] == sel_col) si = static_cast<int>(j);
    else if (header[j] == out_col) oi = static_cast<int>(j);
    else {
      names.push_back(header[j]);
      cov_idx.push_back(static_cast<int>(j));
    }
  }
  if (si < 0) throw std::invalid_argument(path + ": no column " + sel_col);
  if (oi < 0) throw std::invalid_argument(path + ": no column " + out_col);

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("csv row " +
                                  std::to_string(rows.size() + 1) +
                                  ": expected " +
                                  std::to_string(header.size()) + " cells");
    rows.push_back(std::move(cells));
  }

  Dataset d;
  d.names = names;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  d.xcov.resize(n, static_cast<Eigen::Index>(names.size()));
  d.sel.resize(n);
  d.out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = rows[i];
    const double s = parse_num(cells[si], i + 1, sel_col);
    if (s != 0.0 && s != 1.0)
      throw std::invalid_argument("csv row " + std::to_string(i + 1) + ": " +
                                  sel_col + " must be 0 or 1");
    d.sel[i] = s;
    if (is_missing(cells[oi])) {
      if (s == 1.0)
        throw std::invalid_argument("csv row " + std::to_string(i + 1) +
                                    ": missing outcome on a selected row");
      d.out[i] = kNaN;
    } else {
      d.out[i] = parse_num(cells[oi], i + 1, out_col);
    }
    for (size_t c = 0; c < cov_idx.size(); ++c)
      d.xcov(i, static_cast<Eigen::Index>(c)) =
          parse_num(cells[cov_idx[c]], i + 1, names[c]);
  }
  return d;
}

void write_csv(const Dataset& d, const std::string& path,
               const std::string& sel_col, const std::string& out_col) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open " + path);
  os << sel_col << ',' << out_col;
  for (const auto& n : d.names) os << ',' << n;
  os << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    os << format_double(d.sel[i]) << ',' << format_double(d.out[i]);
    for (Eigen::Index c = 0; c < d.xcov.cols(); ++c)
      os << ',' << format_double(d.xcov(i, c));
    os << '\n';
  }
}

namespace {

nlohmann::json terms_to_json(const std::vector<TermSpec>& terms) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : terms) {
    nlohmann::json e{{"column", t.column},
                     {"type", t.smooth ? "smooth" : "linear"}};
    if (t.smooth) {
      e["K"] = t.K;
      e["degree"] = t.degree;
      e["diff_order"] = t.diff_order;
    }
    j.push_back(std::move(e));
  }
  return j;
}

std::vector<TermSpec> terms_from_json(const nlohmann::json& j) {
  std::vector<TermSpec> out;
  for (const auto& e : j) {
    TermSpec t;
    t.column = e.at("column").get<std::string>();
    const std::string type = e.at("type").get<std::string>();
    if (type != "smooth" && type != "linear")
      throw std::invalid_argument("term type must be smooth or linear");
    t.smooth = type == "smooth";
    if (e.contains("K")) t.K = e["K"].get<int>();
    if (e.contains("degree")) t.degree = e["degree"].get<int>();
    if (e.contains("diff_order")) t.diff_order = e["diff_order"].get<int>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& s) {
  return nlohmann::json{
      {"sel_col", s.sel_col},
      {"out_col", s.out_col},
      {"sel_terms", terms_to_json(s.sel_terms)},
      {"out_terms", terms_to_json(s.out_terms)},
      {"margin", margin_name(s.margin)},
      {"copula", copula_name(s.copula)},
      {"theta_init", std::isfinite(s.theta_init)
                         ? nlohmann::json(s.theta_init)
                         : nlohmann::json()},
      {"fix_theta", s.fix_theta},
      {"aux_init", std::isfinite(s.aux_init) ? nlohmann::json(s.aux_init)
                                             : nlohmann::json()},
      {"estimate_aux", s.estimate_aux}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  if (j.contains("sel_col")) s.sel_col = j["sel_col"].get<std::string>();
  if (j.contains("out_col")) s.out_col = j["out_col"].get<std::string>();
  s.sel_terms = terms_from_json(j.at("sel_terms"));
  s.out_terms = terms_from_json(j.at("out_terms"));
  s.margin = margin_from_string(j.at("margin").get<std::string>());
  s.copula = copula_from_string(j.at("copula").get<std::string>());
  s.theta_init = num_or_nan(j, "theta_init");
  if (j.contains("fix_theta")) s.fix_theta = j["fix_theta"].get<bool>();
  s.aux_init = num_or_nan(j, "aux_init");
  if (j.contains("estimate_aux"))
    s.estimate_aux = j["estimate_aux"].get<bool>();
  return s;
}

ModelSpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return spec_from_json(j);
}

namespace {

nlohmann::json layout_to_json(const TermLayout& t) {
  nlohmann::json j{{"column", t.column}, {"smooth", t.smooth},
                   {"offset", t.offset}, {"size", t.size}};
  if (t.smooth) {
    j["K"] = t.K;
    j["degree"] = t.degree;
    j["diff_order"] = t.diff_order;
    j["lo"] = t.lo;
    j["hi"] = t.hi;
    j["center"] = vec_to_json(t.center);
  }
  return j;
}

TermLayout layout_from_json(const nlohmann::json& j) {
  TermLayout t;
  t.column = j.at("column").get<std::string>();
  t.smooth = j.at("smooth").get<bool>();
  t.offset = j.at("offset").get<int>();
  t.size = j.at("size").get<int>();
  if (t.smooth) {
    t.K = j.at("K").get<int>();
    t.degree = j.at("degree").get<int>();
    t.diff_order = j.at("diff_order").get<int>();
    t.lo = j.at("lo").get<double>();
    t.hi = j.at("hi").get<double>();
    t.center = vec_from_json(j.at("center"));
    t.Z = nullspace_transform(t.center);
    const Eigen::MatrixXd D = difference_penalty(t.diff_order, t.K + t.degree);
    t.penalty = t.Z.transpose() * D.transpose() * D * t.Z;
  }
  return t;
}

nlohmann::json eq_to_json(const EqDesign& eq) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : eq.terms) j.push_back(layout_to_json(t));
  return j;
}

EqDesign eq_from_json(const nlohmann::json& j) {
  EqDesign eq;
  eq.dim = 1;
  for (const auto& e : j) {
    eq.terms.push_back(layout_from_json(e));
    eq.dim += eq.terms.back().size;
  }
  return eq;
}

}  // namespace

nlohmann::json model_to_json(const FittedModel& m) {
  return nlohmann::json{
      {"spec", spec_to_json(m.spec)},
      {"names", m.names},
      {"alpha", vec_to_json(m.alpha)},
      {"beta", vec_to_json(m.beta)},
      {"theta_tilde", m.theta_tilde},
      {"theta", m.theta},
      {"tau", m.tau},
      {"aux", m.aux},
      {"lambda", vec_to_json(m.lambda)},
      {"edf", vec_to_json(m.edf)},
      {"cov", mat_to_json(m.cov)},
      {"loglik", m.loglik},
      {"penalized_loglik", m.penalized_loglik},
      {"ubre", m.ubre},
      {"convergence",
       {{"converged", m.converged},
        {"inner_converged", m.inner_converged},
        {"cycles", m.cycles},
        {"inner_iters", m.inner_iters},
        {"hess_ridge", m.hess_ridge},
        {"clamp_cdf", m.clamp_cdf},
        {"clamp_z", m.clamp_z}}},
      {"terms",
       {{"selection", eq_to_json(m.design.eq1)},
        {"outcome", eq_to_json(m.design.eq2)}}}};
}

FittedModel model_from_json(const nlohmann::json& j) {
  FittedModel m;
  m.spec = spec_from_json(j.at("spec"));
  m.names = j.at("names").get<std::vector<std::string>>();
  m.design.eq1 = eq_from_json(j.at("terms").at("selection"));
  m.design.eq2 = eq_from_json(j.at("terms").at("outcome"));
  m.alpha = vec_from_json(j.at("alpha"));
  m.beta = vec_from_json(j.at("beta"));
  m.theta_tilde = j.at("theta_tilde").get<double>();
  m.theta = j.at("theta").get<double>();
  m.tau = j.at("tau").get<double>();
  m.aux = j.at("aux").get<double>();
  m.full.resize(m.alpha.size() + m.beta.size() + 2);
  m.full << m.alpha, m.beta, m.theta_tilde, std::log(m.aux);
  m.lambda = vec_from_json(j.at("lambda"));
  m.edf = vec_from_json(j.at("edf"));
  m.cov = mat_from_json(j.at("cov"));
  m.loglik = j.at("loglik").get<double>();
  m.penalized_loglik = j.at("penalized_loglik").get<double>();
  m.ubre = num_or_nan(j, "ubre");
  const auto& c = j.at("convergence");
  m.converged = c.at("converged").get<bool>();
  m.inner_converged = c.at("inner_converged").get<bool>();
  m.cycles = c.at("cycles").get<int>();
  m.inner_iters = c.at("inner_iters").get<int>();
  m.hess_ridge = c.at("hess_ridge").get<double>();
  m.clamp_cdf = c.at("clamp_cdf").get<Eigen::Index>();
  m.clamp_z = c.at("clamp_z").get<Eigen::Index>();
  return m;
}

void write_model(const FittedModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open " + path);
  os << model_to_json(m).dump(2) << '\n';
}

FittedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

void write_curves_csv(const std::vector<SmoothCurve>& curves,
                      const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open " + path);
  os << "eq,column,x,fit,se,lower,upper\n";
  for (const auto& c : curves)
    for (Eigen::Index i = 0; i < c.x.size(); ++i)
      os << c.eq << ',' << c.column << ',' << format_double(c.x[i]) << ','
         << format_double(c.fit[i]) << ',' << format_double(c.se[i]) << ','
         << format_double(c.fit[i] - 1.96 * c.se[i]) << ','
         << format_double(c.fit[i] + 1.96 * c.se[i]) << '\n';
}

nlohmann::json mc_to_json(const MCReport& r) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : r.estimators) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : e.params)
      params.push_back({{"name", p.name},
                        {"truth", p.truth},
                        {"mean", p.mean},
                        {"sd", p.sd},
                        {"rel_bias_pct", p.rel_bias_pct},
                        {"rmse", p.rmse}});
    nlohmann::json smooths = nlohmann::json::array();
    for (const auto& s : e.smooths)
      smooths.push_back({{"column", s.column}, {"mise", s.mise}});
    est.push_back({{"name", estimator_name(e.kind)},
                   {"n_ok", e.n_ok},
                   {"n_fail", e.n_fail},
                   {"params", std::move(params)},
                   {"smooths", std::move(smooths)},
                   {"test_error", e.test_error},
                   {"eta2_mse", e.eta2_mse}});
  }
  return nlohmann::json{{"study", study_name(r.dgp.which)},
                        {"n", r.dgp.n},
                        {"copula", copula_name(r.dgp.copula.tag)},
                        {"theta", r.dgp.copula.theta},
                        {"tau_true", kendall_tau(r.dgp.copula)},
                        {"seed", r.seed},
                        {"reps", r.reps},
                        {"estimators", std::move(est)}};
}

MCReport mc_from_json(const nlohmann::json& j) {
  MCReport r;
  r.dgp.which = study_from_string(j.at("study").get<std::string>());
  r.dgp.n = j.at("n").get<Eigen::Index>();
  r.dgp.copula.tag = copula_from_string(j.at("copula").get<std::string>());
  r.dgp.copula.theta = j.at("theta").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dgp.seed = r.seed;
  r.reps = j.at("reps").get<int>();
  for (const auto& e : j.at("estimators")) {
    EstimatorSummary s;
    const std::string name = e.at("name").get<std::string>();
    if (name == "gassm") s.kind = EstimatorKind::Gassm;
    else if (name == "gam") s.kind = EstimatorKind::Gam;
    else if (name == "logged") s.kind = EstimatorKind::Logged;
    else s.kind = EstimatorKind::Degenerate;
    s.n_ok = e.at("n_ok").get<int>();
    s.n_fail = e.at("n_fail").get<int>();
    for (const auto& p : e.at("params")) {
      ParamStat ps;
      ps.name = p.at("name").get<std::string>();
      ps.truth = num_or_nan(p, "truth");
      ps.mean = num_or_nan(p, "mean");
      ps.sd = num_or_nan(p, "sd");
      ps.rel_bias_pct = num_or_nan(p, "rel_bias_pct");
      ps.rmse = num_or_nan(p, "rmse");
      s.params.push_back(std::move(ps));
    }
    for (const auto& sm : e.at("smooths")) {
      SmoothStat ss;
      ss.column = sm.at("column").get<std::string>();
      ss.mise = num_or_nan(sm, "mise");
      s.smooths.push_back(std::move(ss));
    }
    s.test_error = num_or_nan(e, "test_error");
    s.eta2_mse = num_or_nan(e, "eta2_mse");
    r.estimators.push_back(std::move(s));
  }
  return r;
}

void append_mc_csv(const MCReport& r, std::ostream& os, bool header) {
  if (header)
    os << "study,n,copula,theta,tau_true,estimator,metric,truth,mean,sd,"
          "rel_bias_pct,rmse,n_ok,n_fail\n";
  const std::string prefix = study_name(r.dgp.which) + "," +
                             std::to_string(r.dgp.n) + "," +
                             copula_name(r.dgp.copula.tag) + "," +
                             format_double(r.dgp.copula.theta) + "," +
                             format_double(kendall_tau(r.dgp.copula)) + ",";
  for (const auto& e : r.estimators) {
    const std::string en = estimator_name(e.kind);
    const std::string counts =
        "," + std::to_string(e.n_ok) + "," + std::to_string(e.n_fail);
    for (const auto& p : e.params)
      os << prefix << en << ',' << p.name << ',' << format_double(p.truth)
         << ',' << format_double(p.mean) << ',' << format_double(p.sd) << ','
         << format_double(p.rel_bias_pct) << ',' << format_double(p.rmse)
         << counts << '\n';
    for (const auto& s : e.smooths)
      os << prefix << en << ",mise:" << s.column << ",,"
         << format_double(s.mise) << ",,," << counts << '\n';
    if (std::isfinite(e.test_error))
      os << prefix << en << ",test_error,," << format_double(e.test_error)
         << ",,," << counts << '\n';
    if (std::isfinite(e.eta2_mse))
      os << prefix << en << ",eta2_mse,," << format_double(e.eta2_mse)
         << ",,," << counts << '\n';
  }
}

void write_mc_csv(const MCReport& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot open " + path);
  append_mc_csv(r, os, true);
}

}  // namespace gassm
