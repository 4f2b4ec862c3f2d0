#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vasctree/grid.hpp"

namespace vasctree {

enum class NodeKind {
  branch,  // three or more incident edge ends
  end,     // one incident edge end, or an isolated blob
  anchor,  // hosts a closed loop that has no branch point
};

const char* to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& s);

struct GraphNode {
  int id = 0;
  Coord pos{};                     // lattice coordinates
  NodeKind kind = NodeKind::end;
  std::vector<std::size_t> cells;  // skeleton cells owned by the node (not serialised)
};

struct GraphEdge {
  int id = 0;
  int u = 0;
  int v = 0;
  std::vector<Coord> polyline;  // lattice-adjacent chain from node u to node v
  double length_px = 0.0;       // sum of lattice step lengths (1, sqrt 2, sqrt 3)
  double radius_px = 0.0;
  double radius_um = 0.0;       // radius_px * scale
  VesselClass cls = VesselClass::single;
  /// Fewer than three distance samples survived the moat; radius is the
  /// untrimmed mean.
  bool low_confidence = false;
  /// Distance-transform samples the radius was computed from.
  std::vector<double> samples;
  /// Skeleton cells folded into the edge when a pass-through node dissolved
  /// (not serialised).
  std::vector<std::size_t> absorbed;
};

struct VesselGraph {
  Spacing spacing{1.0, 1.0, 1.0};
  int ndim = 2;
  double scale = 1.0;  // physical units per lattice unit (µm/px for fundus)
  VesselClass cls = VesselClass::single;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  /// Number of incident edge ends (a self-loop counts twice).
  int degree(int node) const;
  /// Distinct incident edge ids, ascending.
  std::vector<int> incident_edges(int node) const;
  int component_count() const;
  /// |E| - |V| + number of connected components.
  int cycle_rank() const;
};

struct BifurcationRecord {
  int node = 0;
  int parent_edge = 0;
  double parent_px = 0.0;
  double parent_um = 0.0;
  std::vector<int> child_edges;
  std::vector<double> children_px;
  VesselClass cls = VesselClass::single;
};

struct ExtractOptions {
  /// Physical units per lattice unit. Unset: the smallest grid spacing.
  std::optional<double> scale;
  VesselClass cls = VesselClass::single;
  /// Moat radius is max(min_moat, ceil(distance at the node)).
  int min_moat = 2;
  /// Edges with fewer residual samples than this after moat removal are
  /// contracted into their node (junction debris, short spurs).
  std::size_t min_residual = 3;
};

/// Mean of the middle 80% of the samples: sort, drop floor(0.1 n) from each
/// end. Throws DataError on an empty list.
double segment_radius(std::span<const double> samples);

/// mask -> thin -> nodes -> traced edges -> moat-trimmed radii.
VesselGraph extract_graph(const MaskGrid& labels, const ExtractOptions& options = {});

/// Same pipeline from an existing unit-width skeleton and a distance map
/// (lattice units) of the original mask.
VesselGraph graph_from_skeleton(const MaskGrid& skel, const ScalarField& dist,
                                const ExtractOptions& options = {});

/// Cycle rank of the skeleton's traced node/edge graph before any pruning.
int skeleton_cycle_rank(const MaskGrid& skel);

/// One record per node with at least three distinct incident edges. The
/// parent is the widest edge; ties go to the longer edge, then the lower id.
std::vector<BifurcationRecord> bifurcations(const VesselGraph& g);

/// Pixel sizes (µm per pixel for fundus, mm per voxel for 3D) of the public
/// datasets the toolkit was calibrated on.
std::optional<double> dataset_pixel_size(const std::string& dataset);

/// µm per pixel from the field of view, using 0.26 mm per degree of visual
/// angle across `fov_pixels` pixels.
double um_per_px_from_fov(double fov_degrees, double fov_pixels);

}  // namespace vasctree
