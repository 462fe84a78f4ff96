#pragma once

#include <Eigen/Dense>

#include "gassm/likelihood.hpp"
#include "gassm/optimizer.hpp"

namespace gassm {

enum class GlmFamily { Probit, Gaussian, Gamma };

// Penalized single-equation likelihood over one design block.  For Gaussian
// and Gamma the optional trailing coordinate is the margin's auxiliary
// parameter (log sigma / log shape).  `weights` of 0/1 restrict the fit to a
// subset of rows (selected rows for an outcome-only fit).  `ridge` adds a
// small -0.5*ridge*||x||^2 stabilizer used by the starting-value stage so a
// separated probit still returns finite coefficients.
class SingleEqLik : public PenalizedObjective {
 public:
  SingleEqLik(const EqDesign& eq, Eigen::VectorXd y, Eigen::VectorXd weights,
              GlmFamily family, bool estimate_aux = false, double aux0 = 0.0,
              double ridge = 0.0);

  int dim() const override { return dim_; }
  const std::vector<PenaltyBlock>& penalty_blocks() const override {
    return blocks_;
  }
  void eval(const Eigen::VectorXd& x, ObjectiveEval& out,
            bool need_hess) const override;

  bool aux_active() const { return aux_active_; }
  double fixed_aux() const { return aux0_; }
  int n_coef() const { return eq_->dim; }

 private:
  const EqDesign* eq_;
  Eigen::VectorXd y_, w_;
  GlmFamily family_;
  bool aux_active_;
  double aux0_;
  double ridge_;
  int dim_;
  std::vector<PenaltyBlock> blocks_;
};

struct GlmFit {
  Eigen::VectorXd coef;
  double aux = 0.0;  // log sigma / log shape (echoes aux0 when not estimated)
  Eigen::VectorXd lambda;
  FitResult fit;
};

// Penalized ML fit with UBRE-selected smoothing parameters (n_tilde = n).
GlmFit fit_glm(const EqDesign& eq, const Eigen::VectorXd& y,
               const Eigen::VectorXd& weights, GlmFamily family,
               bool estimate_aux = false, double aux0 = 0.0,
               double ridge = 0.0, const FitOpts& opts = {});

}  // namespace gassm
