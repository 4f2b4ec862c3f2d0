#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vasctree/grid.hpp"
#include "vasctree/murray.hpp"
#include "vasctree/skeleton.hpp"

namespace vasctree {

struct LossConfig {
  double lambda = 0.1;  // Murray weight
  double beta = 0.1;    // radius weight
  double tau = 0.1;     // child weighting temperature
  double trim_fraction = 0.10;
  double argmin_temperature = 0.05;
  double junction_threshold = 0.5;
  double dice_eps = 1e-6;
  /// Soft-skeleton iterations; 0 selects default_soft_iterations(p).
  int iterations = 0;
  /// µm per lattice unit, converts predicted radii to target-table widths.
  double scale = 1.0;
  JunctionParams junction;
  std::vector<double> candidates = default_alpha_candidates();
};

void validate(const LossConfig& cfg);

struct MurrayElement {
  std::size_t index = 0;  // cell index of the junction
  Coord pos{};
  double j = 0.0;
  std::size_t parent_cell = 0;
  std::vector<std::size_t> child_cells;
  double r_p = 0.0;  // lattice units
  std::vector<double> children;
  std::vector<double> weights;  // child weighting, reported only
  double alpha_pred = 0.0;
  double alpha_gt = 0.0;
  double error = 0.0;    // (alpha_pred - alpha_gt)^2
  double penalty = 0.0;  // j * error
  bool trimmed = false;
};

struct MurrayTerm {
  double value = 0.0;
  VesselClass cls = VesselClass::single;
  std::vector<MurrayElement> elements;
  /// No junction element entered the penalty.
  bool degenerate = true;
};

/// Soft Dice loss 1 - (2 sum p g + eps) / (sum p + sum g + eps).
double dice_loss(const ScalarField& p, const MaskGrid& gt, double eps = 1e-6);
/// Mean squared difference between p and the 0/1 ground truth.
double mse_loss(const ScalarField& p, const MaskGrid& gt);
/// Mean over cells of |rm_pred sk - rm_gt sk|.
double radius_loss(const ScalarField& rm_pred, const ScalarField& rm_gt, const ScalarField& sk);

/// Junction-weighted Murray penalty of one vessel class. Elements are cells
/// with j above the threshold whose skeleton neighbours (sk > 0.5) form at
/// least three connected arms; each arm contributes its largest radius, the
/// widest arm is the parent. When the gradient
/// pointers are given they receive d(term)/dp and d(term)/d rm_pred (added to
/// their current contents, which must have the input shape).
MurrayTerm murray_loss(const ScalarField& p, const ScalarField& rm_pred, const ExponentTable& table,
                       const LossConfig& cfg, ScalarField* grad_p = nullptr, ScalarField* grad_rm = nullptr);

/// One vessel class of the composite objective.
struct LossChannel {
  VesselClass cls = VesselClass::single;
  ScalarField p;
  ScalarField rm_pred;
  MaskGrid gt;  // 0/1
  ScalarField rm_gt;
  ExponentTable table;
};

struct LossReport {
  double total = 0.0;
  double dice = 0.0;
  double mse = 0.0;
  std::vector<MurrayTerm> murray;  // one per channel
  double murray_sum = 0.0;
  double radius = 0.0;
  std::vector<ScalarField> grad_p;   // one per channel
  std::vector<ScalarField> grad_rm;  // one per channel
};

/// L = Dice + MSE + lambda sum_c Murray_c + beta Rad. Dice, MSE and Rad pool
/// all channels; the Murray term is evaluated per channel. Gradients are
/// filled when `with_gradients` is set.
LossReport total_loss(const std::vector<LossChannel>& channels, const LossConfig& cfg,
                      bool with_gradients = true);

struct GradCheckSample {
  std::size_t channel = 0;
  std::size_t index = 0;
  bool radius_field = false;  // false: d/dp, true: d/d rm_pred
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool tie = false;  // skipped: near a pooling tie
  bool pass = false;
};

struct GradCheckResult {
  std::vector<GradCheckSample> samples;
  std::size_t checked = 0;  // non-tie samples
  std::size_t passed = 0;
  double pass_fraction() const { return checked ? static_cast<double>(passed) / static_cast<double>(checked) : 1.0; }
};

/// Central differences with step h at `cells` randomly chosen interior cells
/// (for p and for rm_pred), compared with total_loss gradients. A sample
/// passes when |a - n| / max(|a|, |n|, floor) < tol.
GradCheckResult gradient_check(const std::vector<LossChannel>& channels, const LossConfig& cfg,
                               std::size_t cells, std::uint64_t seed, double h = 1e-4, double tol = 1e-3,
                               double floor = 1e-6);

}  // namespace vasctree
