#pragma once

#include <string>
#include <vector>

#include "vasctree/grid.hpp"

namespace vasctree {

/// Fraction of cells whose labels agree, over the full label alphabet.
double accuracy(const MaskGrid& pred, const MaskGrid& gt);

/// 2|P n G| / (|P| + |G|) on the class masks; 1 when both are empty.
double dice(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls = VesselClass::single);

/// Harmonic mean of topology precision |thin(P) n G| / |thin(P)| and
/// sensitivity |thin(G) n P| / |thin(G)|; 1 when both are empty.
double cldice(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls = VesselClass::single);

struct CalScore {
  double c = 0.0;  // connectivity
  double a = 0.0;  // area
  double l = 0.0;  // length
  double product = 0.0;
};

/// Connectivity-Area-Length score with dilation radius `radius` (cells).
/// Throws DataError when the ground truth is empty.
CalScore cal(const MaskGrid& pred, const MaskGrid& gt, int radius = 2);

struct BettiNumbers {
  int b0 = 0;
  int b1 = 0;
};

/// 2D: b0 = 8-connected foreground components, b1 = 4-connected background
/// components of the mask padded by one background cell, minus one.
/// 3D: b0 = 26-connected components, b1 = cycle rank of the thinned
/// skeleton's graph.
BettiNumbers betti(const MaskGrid& mask);

struct BettiError {
  int b0 = 0;
  int b1 = 0;
};

BettiError betti_error(const MaskGrid& pred, const MaskGrid& gt);

/// Foreground cells with a face neighbour in the background (outside the
/// grid counts as background).
MaskGrid boundary(const MaskGrid& mask);

/// Symmetric Hausdorff distance between the boundaries of two non-empty
/// masks, in physical units of the ground truth spacing.
double hausdorff(const MaskGrid& pred, const MaskGrid& gt);

struct MetricsRow {
  std::string cls;
  double accuracy = 0.0;
  double dice = 0.0;
  double cldice = 0.0;
  CalScore cal;
  BettiError betti;
  double hausdorff = 0.0;
};

/// All metrics for one class (pred/gt are label maps; CAL, Betti and
/// Hausdorff use the class masks).
MetricsRow evaluate(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls, int cal_radius = 2);

}  // namespace vasctree
