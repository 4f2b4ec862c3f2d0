#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vasctree/grid.hpp"

namespace vasctree {

// ---------------------------------------------------------------------------
// Hard thinning
// ---------------------------------------------------------------------------

/// Topology-preserving thinning to a unit-width skeleton.
///
/// Directional subiterations (N, S, W, E in 2D; six face directions in 3D):
/// border cells facing the current direction are marked, then removed in
/// raster order only if they are still simple (8/4 in 2D, 26/6 in 3D) and not
/// end points. A final sweep drops simple non-end cells that have face
/// neighbours along two axes (staircase corners and 2x2 blocks). A 2x2 block
/// survives only when each of its cells is needed for connectivity.
MaskGrid thin(const MaskGrid& mask);

/// True when deleting the centre cell of the neighbourhood keeps topology.
/// `neighbors` holds the 8 (2D) or 26 (3D) surrounding cells in raster
/// order, centre excluded.
bool is_simple_2d(const std::uint8_t (&neighbors)[8]);
bool is_simple_3d(const std::uint8_t (&neighbors)[26]);

/// Number of skeleton neighbours of a cell (8-connectivity in 2D, 26 in 3D).
int skeleton_degree(const MaskGrid& skel, std::size_t index);

struct SkeletonNodes {
  std::vector<std::size_t> endpoints;      // exactly one skeleton neighbour
  std::vector<std::size_t> branch_points;  // three or more skeleton neighbours
};

/// End points and branch points of a unit-width skeleton, in raster order.
SkeletonNodes classify_nodes(const MaskGrid& skel);

// ---------------------------------------------------------------------------
// Soft skeleton
// ---------------------------------------------------------------------------

/// Iteration count used when none is given: ceil of the largest distance to
/// background of the 0.5-thresholded field (outside the grid counts as
/// background). At least 1.
int default_soft_iterations(const ScalarField& p);

/// Intermediate state of a soft-skeleton evaluation, kept for the adjoint.
struct SoftSkeletonTape {
  Shape shape;
  int iterations = 0;
  std::vector<std::vector<double>> level;     // field entering iteration t
  std::vector<std::vector<double>> accum;     // accumulated response before iteration t
  std::vector<std::vector<double>> residual;  // level - opening, before ReLU
  std::vector<std::vector<double>> delta;     // ReLU(residual)
  std::vector<std::vector<std::int64_t>> erode_arg;   // -1 marks the zero pad
  std::vector<std::vector<std::int64_t>> dilate_arg;
  std::vector<double> raw;     // final accumulation
  std::int64_t max_index = -1;  // argmax of raw, -1 when raw is all zero
  double max_value = 0.0;
  /// Per input cell: 1 when the cell feeds a pooling window whose winner is
  /// within 1e-6 of a candidate from a different input cell. Gradient checks
  /// skip these cells because the adjoint is one-sided there.
  std::vector<std::uint8_t> near_tie;
  /// The global maximum used for normalisation is within 1e-6 of another cell.
  bool max_near_tie = false;
};

/// Differentiable soft skeleton of a probability field.
///
/// Each iteration computes the opening dilate(erode(level)) with a cross
/// (4/6-neighbour plus centre) window, adds ReLU(level - opening) into the
/// accumulation with the union rule acc + ReLU(d - acc * d), then erodes the
/// level. Erosion treats cells outside the grid as 0. The result is divided by
/// its global maximum, or left all-zero when that maximum is 0.
ScalarField soft_skeleton(const ScalarField& p, int iterations);

/// Same as soft_skeleton, also filling `tape` for soft_skeleton_backward.
ScalarField soft_skeleton(const ScalarField& p, int iterations, SoftSkeletonTape& tape);

/// Reverse sweep: gradient of a scalar with respect to p, given its gradient
/// with respect to the soft skeleton. Pool adjoints route to the first winner
/// in window order; ReLU uses subgradient 0 at 0.
ScalarField soft_skeleton_backward(const SoftSkeletonTape& tape, const ScalarField& grad_sk);

struct JunctionParams {
  int kernel_size = 3;
  double sharpness = 50.0;
  double offset = 3.5;
};

/// j(u) = sigmoid(sharpness * (box_sum(sk)(u) - offset)) * sk(u), where the
/// box sum runs over a kernel_size^ndim all-ones window with zero padding.
ScalarField junction_map(const ScalarField& sk, const JunctionParams& params = {});

/// Adjoint of junction_map.
ScalarField junction_map_backward(const ScalarField& sk, const JunctionParams& params,
                                  const ScalarField& grad_j);

}  // namespace vasctree
