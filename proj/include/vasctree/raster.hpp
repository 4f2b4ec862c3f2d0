#pragma once

#include <cstddef>
#include <vector>

#include "vasctree/grid.hpp"

namespace vasctree {

/// Binary 0/1 mask of the cells belonging to `cls`. `both` cells belong to
/// artery and vein; `single` selects every non-background cell.
MaskGrid class_mask(const MaskGrid& labels, VesselClass cls);

/// Throws DataError when a label lies outside {background, artery, vein, both}.
void validate_labels(const MaskGrid& labels);

std::size_t count_foreground(const MaskGrid& mask);

enum class EdtUnits {
  /// Lattice units. Anisotropic spacing is normalised by the smallest axis.
  pixels,
  /// Physical units from the grid spacing.
  physical,
};

/// Exact Euclidean distance from every foreground cell of `cls` to the nearest
/// background cell centre; background cells hold 0. Throws DataError when the
/// grid contains no background cell.
ScalarField edt(const MaskGrid& labels, VesselClass cls = VesselClass::single,
                EdtUnits units = EdtUnits::pixels);

/// Exact squared distance from every cell to the nearest non-zero cell of
/// `sites`, with per-axis step weights. Cells get +inf when `sites` is empty.
/// Separable lower-envelope passes, one per axis.
ScalarField squared_distance_to(const MaskGrid& sites, const std::array<double, 3>& weights);

/// Per-axis step lengths for `units`.
std::array<double, 3> axis_weights(const Spacing& spacing, int ndim, EdtUnits units);

enum class MorphOp { dilate, erode, open, close };

/// Binary morphology with the discrete Euclidean ball {d : |d|^2 <= r^2}.
/// Cells outside the grid are ignored by both primitives, so opening and
/// closing are idempotent and closing is extensive up to the border.
MaskGrid morph(const MaskGrid& mask, MorphOp op, int radius);

/// Neighbour offsets for a connectivity (4/8 in 2D, 6/18/26 in 3D), in raster
/// order (z, then y, then x), centre excluded.
const std::vector<Coord>& neighbor_offsets(int ndim, int connectivity);

/// Default foreground connectivity: 8 in 2D, 26 in 3D.
int default_fg_connectivity(int ndim);
/// Default background connectivity: 4 in 2D, 6 in 3D.
int default_bg_connectivity(int ndim);

struct Components {
  LabelField labels;  // 0 for background, 1..count otherwise
  int count = 0;
};

/// Connected components of non-zero cells, labelled in raster order of
/// discovery.
Components components(const MaskGrid& mask, int connectivity);

/// Drops components with fewer than `min_cells` cells.
MaskGrid remove_small_regions(const MaskGrid& mask, std::size_t min_cells, int connectivity);

}  // namespace vasctree
