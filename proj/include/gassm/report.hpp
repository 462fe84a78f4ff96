#pragma once

#include <string>
#include <vector>

#include "gassm/simulate.hpp"

namespace gassm {

// Reference values for the bundled studies, taken from large-run results,
// compared with a tolerance wide enough for desk-scale replication counts.
// Bias entries use an absolute band in percentage points; SD and RMSE
// entries a relative band.
struct ReferenceEntry {
  StudyKind study = StudyKind::Consistency;
  Eigen::Index n = 0;
  CopulaTag copula = CopulaTag::Gumbel;
  double tau = 0.0;
  std::string estimator;  // "gassm" | "gam" | "logged"
  std::string metric;     // e.g. "sd:b4", "rel_bias_pct:b0", "rmse:tau"
  double value = 0.0;
  double rel_tol = 0.0;  // fraction of |value|; 0 means use abs_tol
  double abs_tol = 0.0;
};

const std::vector<ReferenceEntry>& reference_values();

struct ReportLine {
  std::string label;
  double expected = 0.0;
  double got = 0.0;
  bool found = false;
  bool pass = false;
};

// Every reference entry that matches some loaded report, with its check.
std::vector<ReportLine> compare_reports(const std::vector<MCReport>& reports);

// Human-readable summary: per-study sections with estimator tables followed
// by the reference checks.
std::string render_report(const std::vector<MCReport>& reports);

}  // namespace gassm
