#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vasctree/grid.hpp"
#include "vasctree/vessgraph.hpp"

namespace vasctree {

/// g(alpha) = alpha ln r_p - LSE_i(alpha ln r_ci). Zero exactly where
/// r_p^alpha = sum_i r_ci^alpha.
double murray_log_residual(double alpha, double r_p, std::span<const double> children);

/// Murray exponent of one bifurcation, or nullopt (discard) when no positive
/// root exists in the expanded bracket. Bisection on the log-space residual
/// until the bracket collapses; returns the end with the smaller |g|. Throws DataError on non-positive radii or fewer than two
/// children.
std::optional<double> solve_alpha(double r_p, std::span<const double> children);

struct ExponentBin {
  double width_um = 0.0;  // bin centre
  double alpha = 0.0;     // mean of the bin, or interpolated when sparse
  std::size_t count = 0;  // accepted records in the bin
};

struct ExponentTable {
  double bin_width_um = 1.0;
  std::vector<ExponentBin> bins;  // ascending width
  double sigma_log = 1.0;
  VesselClass cls = VesselClass::single;
  double pooled_alpha = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_records = 0;    // accepted records
  std::size_t n_discarded = 0;
  bool fixed = false;  // single exponent for every width

  /// Piecewise-linear exponent at a width, clamped to the end bins.
  double lookup(double width_um) const;
};

struct TableOptions {
  double bin_width_um = 1.0;
  /// Bins with fewer samples are filled by linear interpolation between the
  /// nearest bins that have at least this many.
  std::size_t min_bin_count = 5;
  std::size_t bootstrap_resamples = 1000;
  std::uint64_t bootstrap_seed = 42;
};

/// One accepted exponent with the parent width it was measured at.
struct AlphaSample {
  double width_um = 0.0;
  double alpha = 0.0;
};

/// Solves every record (parent width = parent_px * scale) and bins the
/// accepted exponents. Throws NumericalError when no record is accepted.
ExponentTable build_table(std::span<const BifurcationRecord> records, double scale,
                          VesselClass cls = VesselClass::single, const TableOptions& options = {});

/// Table from already solved samples.
ExponentTable table_from_samples(std::span<const AlphaSample> samples, std::size_t n_discarded,
                                 VesselClass cls = VesselClass::single, const TableOptions& options = {});

/// Degenerate table returning `alpha` at every width; sigma_log = 1.
ExponentTable fixed_table(double alpha);

/// Gaussian-in-log-width weighted exponent at parent radius R_p (µm).
double alpha_target(double r_p_um, const ExponentTable& table);

/// d alpha_target / d R_p.
double alpha_target_derivative(double r_p_um, const ExponentTable& table);

/// ln sum_i r_ci^alpha, evaluated with the max-shift so it cannot overflow.
double lse_capacity(std::span<const double> children, double alpha);

/// Softmax of r_ci / (tau * max_j r_cj).
std::vector<double> child_weights(std::span<const double> children, double tau = 0.1);

/// Default soft-argmin candidates: 0.5, 0.6, ..., 6.0.
std::vector<double> default_alpha_candidates();

/// sum_k alpha_k softmax_k(-e_k / T) with
/// e_k = (alpha_k ln R_p - lse_capacity(children, alpha_k))^2.
double alpha_predicted(double r_p, std::span<const double> children, std::span<const double> candidates,
                       double temperature = 0.05);

struct AlphaPredictedGrad {
  double value = 0.0;
  double d_parent = 0.0;
  std::vector<double> d_children;
};

/// alpha_predicted with its partial derivatives.
AlphaPredictedGrad alpha_predicted_grad(double r_p, std::span<const double> children,
                                        std::span<const double> candidates, double temperature = 0.05);

}  // namespace vasctree
