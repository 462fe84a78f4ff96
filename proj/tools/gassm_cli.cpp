#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gassm/heckman.hpp"
#include "gassm/io.hpp"
#include "gassm/model.hpp"
#include "gassm/report.hpp"
#include "gassm/simulate.hpp"

namespace fs = std::filesystem;
using namespace gassm;

namespace {

// Exit codes: 0 ok, 2 input/parse error, 3 fit or study failure.
constexpr int kOk = 0;
constexpr int kParseError = 2;
constexpr int kFitError = 3;

int fail(int code, const std::string& msg) {
  nlohmann::json j{{"error", msg}, {"code", code}};
  std::cerr << j.dump() << "\n";
  return code;
}

fs::path ensure_outdir(const std::string& out_dir) {
  fs::path p = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(p);
  return p;
}

struct FitArgs {
  std::string data_path, spec_path, out_dir;
  std::string copula, margin;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  bool fix_theta = false;
  bool heckman = false;
};

int cmd_fit(const FitArgs& a) {
  ModelSpec spec;
  Dataset data;
  try {
    spec = read_spec(a.spec_path);
    if (!a.copula.empty()) spec.copula = copula_from_string(a.copula);
    if (!a.margin.empty()) spec.margin = margin_from_string(a.margin);
    if (std::isfinite(a.theta)) spec.theta_init = a.theta;
    if (std::isfinite(a.tau)) spec.theta_init = tau_to_theta(spec.copula, a.tau);
    if (a.fix_theta) spec.fix_theta = true;
    data = read_csv(a.data_path, spec.sel_col, spec.out_col);
    validate(data, spec);
  } catch (const std::exception& e) {
    return fail(kParseError, e.what());
  }
  try {
    const fs::path out = ensure_outdir(a.out_dir);
    if (a.heckman) {
      const TwoStepFit ts = two_step(data, spec);
      const FimlFit ml = gaussian_fiml(data, spec);
      nlohmann::json j{
          {"two_step",
           {{"beta1", std::vector<double>(ts.beta1.begin(), ts.beta1.end())},
            {"beta2", std::vector<double>(ts.beta2.begin(), ts.beta2.end())},
            {"gamma", ts.gamma},
            {"sigma", ts.sigma},
            {"rho_raw", ts.rho_raw},
            {"rho", ts.rho},
            {"n_sel", ts.n_sel},
            {"has_exclusion", ts.has_exclusion}}},
          {"fiml",
           {{"beta1", std::vector<double>(ml.beta1.begin(), ml.beta1.end())},
            {"beta2", std::vector<double>(ml.beta2.begin(), ml.beta2.end())},
            {"sigma", ml.sigma},
            {"rho", ml.rho},
            {"loglik", ml.loglik},
            {"converged", ml.converged}}}};
      std::ofstream os(out / "heckman.json");
      os << j.dump(2) << "\n";
      if (!ts.has_exclusion)
        std::cerr << "warning: no exclusion restriction; identification rests "
                     "on the nonlinearity of the selection correction\n";
      return kOk;
    }
    FittedModel fm = fit_model(data, spec);
    nlohmann::json j = model_to_json(fm);
    Eigen::VectorXd v1, v2;
    predictor_variance(fm, data, v1, v2);
    j["var_eta1"] = std::vector<double>(v1.begin(), v1.end());
    j["var_eta2"] = std::vector<double>(v2.begin(), v2.end());
    {
      std::ofstream os(out / "fit.json");
      os << j.dump(2) << "\n";
    }
    write_curves_csv(smooth_curves(fm), (out / "curves.csv").string());
    if (!fm.converged && !fm.inner_converged)
      return fail(kFitError, "fit did not converge");
    return kOk;
  } catch (const std::exception& e) {
    return fail(kFitError, e.what());
  }
}

struct SimArgs {
  std::string study = "consistency";
  Eigen::Index n = 1000;
  std::string copula;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  double sel_shift = 0.0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

DGPSpec make_dgp(const SimArgs& a) {
  DGPSpec g;
  g.which = study_from_string(a.study);
  g.n = a.n;
  g.seed = a.seed;
  g.sel_shift = a.sel_shift;
  if (g.which == StudyKind::Consistency) g.copula = {CopulaTag::Gumbel, 3.0};
  else g.copula = {CopulaTag::Normal, tau_to_theta(CopulaTag::Normal, 0.5)};
  if (!a.copula.empty()) g.copula.tag = copula_from_string(a.copula);
  if (std::isfinite(a.theta)) g.copula.theta = a.theta;
  else if (std::isfinite(a.tau))
    g.copula.theta = tau_to_theta(g.copula.tag, a.tau);
  else if (!a.copula.empty() && g.which == StudyKind::Logged)
    g.copula.theta = tau_to_theta(g.copula.tag, 0.5);
  return g;
}

int cmd_simulate(const SimArgs& a) {
  DGPSpec g;
  try {
    g = make_dgp(a);
    check_theta(g.copula);
  } catch (const std::exception& e) {
    return fail(kParseError, e.what());
  }
  try {
    const Dataset d = generate(g);
    const fs::path out = ensure_outdir(a.out_dir);
    write_csv(d, (out / "data.csv").string());
    nlohmann::json meta{{"study", study_name(g.which)},
                        {"n", g.n},
                        {"copula", copula_name(g.copula.tag)},
                        {"theta", g.copula.theta},
                        {"tau", kendall_tau(g.copula)},
                        {"seed", g.seed},
                        {"sel_shift", g.sel_shift},
                        {"selected", static_cast<long>(d.sel.sum())}};
    std::ofstream os(out / "meta.json");
    os << meta.dump(2) << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail(kFitError, e.what());
  }
}

struct McArgs {
  std::string study = "consistency";
  std::vector<Eigen::Index> ns;
  std::vector<std::string> copulas;
  std::vector<double> taus;
  int reps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir;
};

int cmd_mc(const McArgs& a) {
  StudyKind study;
  std::vector<Eigen::Index> ns = a.ns;
  std::vector<CopulaTag> copulas;
  std::vector<double> taus = a.taus;
  try {
    study = study_from_string(a.study);
    for (const auto& c : a.copulas) copulas.push_back(copula_from_string(c));
    if (ns.empty())
      ns = study == StudyKind::Consistency
               ? std::vector<Eigen::Index>{500, 1000, 2000}
               : std::vector<Eigen::Index>{1000};
    if (copulas.empty())
      copulas = study == StudyKind::Consistency
                    ? std::vector<CopulaTag>{CopulaTag::Gumbel}
                    : std::vector<CopulaTag>{CopulaTag::Normal,
                                             CopulaTag::Frank,
                                             CopulaTag::Clayton};
    if (taus.empty() && study == StudyKind::Logged) taus = {0.1, 0.5, 0.7};
    if (a.reps < 1) throw std::invalid_argument("reps must be >= 1");
  } catch (const std::exception& e) {
    return fail(kParseError, e.what());
  }

  try {
    const fs::path out = ensure_outdir(a.out_dir);
    const std::vector<EstimatorKind> kinds =
        study == StudyKind::Consistency
            ? std::vector<EstimatorKind>{EstimatorKind::Gassm,
                                         EstimatorKind::Gam}
            : std::vector<EstimatorKind>{EstimatorKind::Gassm,
                                         EstimatorKind::Logged};
    std::ofstream combined(out / ("mc_" + study_name(study) + ".csv"));
    bool header = true;
    long total = 0, ok = 0;
    int combo = 0;
    for (CopulaTag tag : copulas) {
      std::vector<double> tau_list = taus;
      if (tau_list.empty()) tau_list = {kendall_tau({tag, 3.0})};
      for (double tau : tau_list) {
        DGPSpec g;
        g.which = study;
        g.copula.tag = tag;
        g.copula.theta = study == StudyKind::Consistency && tag == CopulaTag::Gumbel &&
                                 std::abs(tau - kendall_tau({tag, 3.0})) < 1e-12
                             ? 3.0
                             : tau_to_theta(tag, tau);
        for (Eigen::Index n : ns) {
          g.n = n;
          const MCReport rep =
              mc_study(g, kinds, a.reps, derive_seed(a.seed, combo), a.threads);
          ++combo;
          for (const auto& e : rep.estimators) {
            total += e.n_ok + e.n_fail;
            ok += e.n_ok;
          }
          std::ostringstream name;
          name << "mc_" << study_name(study) << "_" << copula_name(tag)
               << "_tau" << format_double(kendall_tau(g.copula)) << "_n" << n
               << ".json";
          std::ofstream js(out / name.str());
          js << mc_to_json(rep).dump(2) << "\n";
          append_mc_csv(rep, combined, header);
          header = false;
          std::cout << "done " << name.str() << " (ok "
                    << rep.estimators.front().n_ok << "/" << a.reps << ")\n";
        }
      }
    }
    if (total == 0 || 10 * ok < 9 * total)
      return fail(kFitError, "more than 10% of replications failed");
    return kOk;
  } catch (const std::exception& e) {
    return fail(kFitError, e.what());
  }
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
};

int cmd_report(const ReportArgs& a) {
  std::vector<MCReport> reports;
  try {
    for (const auto& path : a.inputs) {
      if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(path))
          if (e.path().extension() == ".json" &&
              e.path().filename().string().rfind("mc_", 0) == 0)
            files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
          std::ifstream in(f);
          nlohmann::json j;
          in >> j;
          reports.push_back(mc_from_json(j));
        }
      } else {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open " + path);
        nlohmann::json j;
        in >> j;
        reports.push_back(mc_from_json(j));
      }
    }
    if (reports.empty())
      return fail(kParseError, "no study reports found in the inputs");
  } catch (const std::exception& e) {
    return fail(kParseError, e.what());
  }
  const std::string text = render_report(reports);
  std::cout << text;
  if (!a.out_dir.empty()) {
    const fs::path out = ensure_outdir(a.out_dir);
    std::ofstream os(out / "report.txt");
    os << text;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula-linked additive sample selection models"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* cfit = app.add_subcommand("fit", "Fit a model to a CSV dataset");
  cfit->add_option("--data", fit.data_path, "CSV file with header row")
      ->required();
  cfit->add_option("--spec", fit.spec_path, "Model spec JSON")->required();
  cfit->add_option("--out-dir", fit.out_dir, "Output directory")
      ->envname("GASSM_OUT_DIR");
  cfit->add_option("--copula", fit.copula, "Override the spec copula family");
  cfit->add_option("--margin", fit.margin, "Override the spec margin");
  cfit->add_option("--tau", fit.tau,
                   "Dependence start given as Kendall tau (converted)");
  cfit->add_option("--theta", fit.theta, "Dependence start on the theta scale");
  cfit->add_flag("--fix-theta", fit.fix_theta, "Hold theta at its start");
  cfit->add_flag("--heckman", fit.heckman,
                 "Classical Gaussian two-step and joint ML instead");

  SimArgs sim;
  auto* csim = app.add_subcommand("simulate", "Write one simulated dataset");
  csim->add_option("--study", sim.study, "consistency | logged");
  csim->add_option("--n", sim.n, "Sample size");
  csim->add_option("--copula", sim.copula, "Copula family");
  csim->add_option("--tau", sim.tau, "Kendall tau (converted to theta)");
  csim->add_option("--theta", sim.theta, "Copula parameter");
  csim->add_option("--sel-shift", sim.sel_shift,
                   "Shift added to the selection predictor");
  csim->add_option("--seed", sim.seed, "RNG seed");
  csim->add_option("--out-dir", sim.out_dir, "Output directory")
      ->envname("GASSM_OUT_DIR");

  McArgs mc;
  auto* cmc = app.add_subcommand("mc", "Run a Monte Carlo study");
  cmc->add_option("--study", mc.study, "consistency | logged");
  cmc->add_option("--n", mc.ns, "Sample sizes (repeatable)");
  cmc->add_option("--copula", mc.copulas, "Copula families (repeatable)");
  cmc->add_option("--tau", mc.taus, "Kendall tau values (repeatable)");
  cmc->add_option("--reps", mc.reps, "Replications per configuration");
  cmc->add_option("--seed", mc.seed, "Base seed");
  cmc->add_option("--threads", mc.threads, "Worker threads");
  cmc->add_option("--out-dir", mc.out_dir, "Output directory")
      ->envname("GASSM_OUT_DIR");

  ReportArgs rep;
  auto* crep = app.add_subcommand("report", "Summarize study reports");
  crep->add_option("inputs", rep.inputs, "Report JSON files or directories")
      ->required();
  crep->add_option("--out-dir", rep.out_dir, "Also write report.txt here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    nlohmann::json j{{"error", e.what()}, {"code", kParseError}};
    std::cerr << j.dump() << "\n";
    return kParseError;
  }

  if (cfit->parsed()) return cmd_fit(fit);
  if (csim->parsed()) return cmd_simulate(sim);
  if (cmc->parsed()) return cmd_mc(mc);
  return cmd_report(rep);
}
