#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gassm/copulas.hpp"
#include "gassm/data.hpp"
#include "gassm/margins.hpp"
#include "gassm/splines.hpp"

namespace gassm {

// z(y2, eta1, eta2) = dC/dv at (F1(0), F2(y2)); the observed-outcome part of
// the likelihood is log f2 + log(1 - z).
double z_fn(const CopulaFamily& fam, MarginFamily margin, double y2,
            double eta1, double eta2, double aux);

// E(Y2* | Y1 = 1) - E(Y2*) under the model, by adaptive quadrature.
double selection_bias(const CopulaFamily& fam, MarginFamily margin,
                      double eta1, double eta2, double aux);

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  bool ok = false;
  Eigen::Index bad_row = -1;  // first row that produced a non-finite term
};

// A coordinate block carrying a quadratic penalty S scaled by one smoothing
// parameter.  Offsets refer to the objective's own coordinate vector.
struct PenaltyBlock {
  int offset = 0;
  int size = 0;
  Eigen::MatrixXd S;
};

// Penalized log-likelihood surface: the optimizer maximizes
//   value(x) - 0.5 sum_j lambda_j x_j' S_j x_j.
class PenalizedObjective {
 public:
  virtual ~PenalizedObjective() = default;
  virtual int dim() const = 0;
  virtual const std::vector<PenaltyBlock>& penalty_blocks() const = 0;
  // Evaluates the unpenalized log-likelihood with gradient (and Hessian when
  // need_hess).  Non-finite rows set ok = false instead of throwing.
  virtual void eval(const Eigen::VectorXd& x, ObjectiveEval& out,
                    bool need_hess) const = 0;
};

// Coordinate layout of the joint parameter vector
// [alpha (m1) | beta (m2) | theta_tilde | aux].
struct ParamLayout {
  int m1 = 0, m2 = 0;
  bool theta_active = true;
  bool aux_active = true;
  int full_dim() const { return m1 + m2 + 2; }
  int theta_idx() const { return m1 + m2; }
  int aux_idx() const { return m1 + m2 + 1; }
  int active_dim() const {
    return m1 + m2 + (theta_active ? 1 : 0) + (aux_active ? 1 : 0);
  }
};

// Joint sample-selection likelihood over the active coordinates.  Fixed
// coordinates (theta under fix_theta, aux for a pinned margin parameter)
// keep the values stored in `fixed`.
class SelectionLik : public PenalizedObjective {
 public:
  SelectionLik(const Dataset& data, const ModelSpec& spec,
               const DesignBlocks& design);

  int dim() const override { return layout_.active_dim(); }
  const std::vector<PenaltyBlock>& penalty_blocks() const override {
    return blocks_;
  }
  void eval(const Eigen::VectorXd& x, ObjectiveEval& out,
            bool need_hess) const override;

  // Expected information variant: per-row weights are integrated over the
  // model distribution of (Y1, Y2) at the current parameters instead of using
  // observed responses.
  void eval_expected(const Eigen::VectorXd& x, ObjectiveEval& out) const;

  const ParamLayout& layout() const { return layout_; }
  Eigen::VectorXd expand(const Eigen::VectorXd& active) const;
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
  void set_fixed(const Eigen::VectorXd& full) { fixed_ = full; }
  const Eigen::VectorXd& fixed_values() const { return fixed_; }

  // Clamp counters from the most recent eval (diagnostics).
  struct ClampStats {
    Eigen::Index cdf = 0;  // margin/selection cdf values pushed off 0/1
    Eigen::Index z = 0;    // z values pushed below 1
  };
  const ClampStats& clamps() const { return clamps_; }

  const Dataset& data() const { return *data_; }
  const ModelSpec& spec() const { return *spec_; }
  const DesignBlocks& design() const { return *design_; }

 private:
  const Dataset* data_;
  const ModelSpec* spec_;
  const DesignBlocks* design_;
  ParamLayout layout_;
  std::vector<PenaltyBlock> blocks_;
  Eigen::VectorXd fixed_;  // full-length template for inactive coords
  mutable ClampStats clamps_;
};

// Penalized value/grad/Hessian at x for given per-block lambda; wraps eval.
void add_penalty(const PenalizedObjective& obj, const Eigen::VectorXd& lambda,
                 const Eigen::VectorXd& x, ObjectiveEval& ev, bool need_hess);

// Block-diagonal S(lambda), full objective dimension.
Eigen::MatrixXd penalty_matrix(const PenalizedObjective& obj,
                               const Eigen::VectorXd& lambda);

}  // namespace gassm
