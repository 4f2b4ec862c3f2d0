#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vasctree/grid.hpp"
#include "vasctree/vessgraph.hpp"

namespace vasctree {

/// Linear congruential generator (Knuth MMIX constants:
/// x' = 6364136223846793005 x + 1442695040888963407 mod 2^64).
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }
  /// Uniform in [-1, 1) from the top 53 bits.
  double symmetric() { return static_cast<double>(next() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

 private:
  std::uint64_t state_;
};

struct TreeParams {
  double alpha = 3.0;
  int depth = 3;              // bifurcation levels
  double root_radius = 8.0;   // px
  double branch_angle = 60.0; // degrees between sibling directions
  double length_ratio = 0.7;
  std::uint64_t seed = 42;
  double root_length = 0.0;   // px; 0 selects 12 * root_radius
  double scale = 1.0;         // µm per px written into the graph
};

void validate(const TreeParams& p);

struct SynthSegment {
  int parent = -1;  // index of the parent segment
  int level = 0;
  std::array<double, 2> start{};
  std::array<double, 2> end{};
  double radius = 0.0;
};

struct SynthTree {
  TreeParams params;
  std::vector<SynthSegment> segments;  // breadth-first, root first
  VesselGraph graph;                   // exact radii, Bresenham polylines
  MaskGrid mask;                       // 0/1
  ScalarField rm_gt;                   // distance transform of the mask
};

/// Binary tree whose children have radius parent * 2^(-1/alpha). A cell is
/// foreground when its centre lies within radius - 0.5 of a segment axis, so
/// the distance to the nearest background cell centre equals the radius on
/// axis-aligned segments. Enclosed background pockets are filled. Sibling
/// directions deviate by +-branch_angle/2 with a +-10% LCG perturbation.
/// Throws DataError when non-adjacent branches come within r_a + r_b + 2 px
/// of each other.
SynthTree gen_tree(const TreeParams& params);

struct AvPair {
  SynthTree artery;
  SynthTree vein;
  MaskGrid labels;  // 0 bg, 1 artery, 2 vein, 3 both
  std::array<double, 3> disc{};
  std::array<double, 3> macula_center{};
  double macula_radius = 0.0;
};

/// Artery tree growing down from the disc and its mirror image (about the
/// horizontal line through the disc) as the vein tree, on a shared canvas.
/// Radii of each tree are multiplied by its scale after the geometry is
/// fixed. The macula is the centroid of all leaves with a radius reaching
/// every leaf.
AvPair gen_av_pair(const TreeParams& params, double artery_radius_scale = 1.0,
                   double vein_radius_scale = 1.0);

}  // namespace vasctree
