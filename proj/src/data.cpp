#include "gassm/data.hpp"

#include <cmath>
#include <stdexcept>

namespace gassm {

int Dataset::col(const std::string& name) const {
  for (size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<int>(j);
  throw std::invalid_argument("covariate column not found: " + name);
}

void validate(const Dataset& data, const ModelSpec& spec) {
  const Eigen::Index n = data.n();
  if (n == 0) throw std::invalid_argument("empty dataset");
  if (data.out.size() != n || data.xcov.rows() != n)
    throw std::invalid_argument("ragged dataset: column lengths differ");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = data.sel[i];
    if (s != 0.0 && s != 1.0)
      throw std::invalid_argument("selection indicator not 0/1 at row " + std::to_string(i));
    if (s == 1.0 && !std::isfinite(data.out[i]))
      throw std::invalid_argument("missing outcome on selected row " + std::to_string(i));
    if (spec.margin == MarginFamily::Gamma && s == 1.0 && !(data.out[i] > 0.0))
      throw std::invalid_argument("gamma outcome must be positive, row " + std::to_string(i));
  }
  if (data.sel.sum() < 2.0) throw std::invalid_argument("fewer than 2 selected rows");
  auto check_terms = [&](const std::vector<TermSpec>& terms) {
    for (const auto& t : terms) {
      const int j = data.col(t.column);
      const double lo = data.xcov.col(j).minCoeff();
      const double hi = data.xcov.col(j).maxCoeff();
      if (!(hi > lo))
        throw std::invalid_argument("constant covariate column: " + t.column);
      if (t.smooth && (t.K < 1 || t.degree < 1 || t.diff_order < 1 || t.diff_order >= t.K + t.degree))
        throw std::invalid_argument("bad smooth configuration for " + t.column);
    }
  };
  check_terms(spec.sel_terms);
  check_terms(spec.out_terms);
  if (spec.fix_theta && !std::isfinite(spec.theta_init))
    throw std::invalid_argument("fix_theta requires an explicit theta or tau");
}

}  // namespace gassm
