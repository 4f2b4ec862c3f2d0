#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vasctree/murray.hpp"
#include "vasctree/vessgraph.hpp"

namespace vasctree {

/// Which combination of the cumulative drops ΔP_A and ΔP_V is subtracted
/// from P_in - P_out.
enum class VenousSign {
  paper,     // (P_in - P_out) - (ΔP_A - ΔP_V)
  physical,  // (P_in - P_out) - (ΔP_A + ΔP_V)
};

const char* to_string(VenousSign s);
VenousSign venous_sign_from_string(const std::string& s);

struct SimConfig {
  double p_in = 76.9;   // mmHg
  double p_out = 21.0;  // mmHg
  double eta = 1.0;     // viscosity, >= 0
  double k = 1.0;       // pixel-to-pressure calibration
  std::array<double, 3> disc{0.0, 0.0, 0.0};           // lattice coordinates
  std::array<double, 3> macula_center{0.0, 0.0, 0.0};  // lattice coordinates
  double macula_radius = 0.0;                           // lattice units
  VenousSign sign = VenousSign::paper;
};

void validate(const SimConfig& cfg);

/// Flow share r_i^alpha / sum_j r_j^alpha of q0 per child. The shares are
/// adjusted so their compensated sum equals q0.
std::vector<double> partition_flow(double q0, std::span<const double> radii, double alpha);

/// 8 eta L / (pi r^4).
double poiseuille_resistance(double length_px, double radius_px, double eta);

/// K |Q| 8 eta L / (pi r^4). Throws DataError when r <= 0.
double poiseuille_dp(double q, double length_px, double radius_px, double eta, double k);

struct FlowEdge {
  int edge = 0;  // id in the source graph
  int from = 0;
  int to = 0;
  double length_px = 0.0;
  double radius_px = 0.0;
  double radius_um = 0.0;
  double resistance = 0.0;  // 8 eta L / (pi r^4)
  double q = 0.0;
  double dp = 0.0;
};

struct FlowGraph {
  VesselClass cls = VesselClass::single;
  std::vector<Coord> node_pos;
  std::vector<FlowEdge> edges;    // tree edges directed away from the roots
  std::vector<int> roots;         // one per connected component
  std::vector<int> removed_edges; // source edge ids dropped to break cycles
  std::vector<int> parent_edge;   // per node, index into edges or -1
  std::vector<std::vector<int>> out_edges;  // per node, indices into edges
  std::vector<double> cum_dp;     // per node, cumulative drop from its root
  std::vector<double> pressure;   // per node
  bool propagated = false;
};

/// Roots every component at the node nearest the disc, keeps the
/// minimum-resistance spanning forest (so each cycle loses its
/// highest-resistance edge, which is flagged) and directs edges away from the
/// roots by breadth-first search. Throws DataError on an empty graph.
FlowGraph root_and_orient(const VesselGraph& g, const std::array<double, 3>& disc, double eta = 1.0);

/// Unit inflow at each root, split at every node by partition_flow with the
/// exponent looked up at the parent width; Poiseuille drops along edges;
/// arterial pressures P_in - cumulative drop, venous P_out + cumulative drop.
/// Throws DataError when the edges do not form a forest.
FlowGraph propagate(const FlowGraph& fg, const SimConfig& cfg, const ExponentTable& table);

struct PathDrop {
  int endpoint = 0;
  Coord pos{};
  double cum_dp = 0.0;
  VesselClass cls = VesselClass::single;
};

struct AvResult {
  double delta_p_av = 0.0;
  double dp_a = 0.0;  // mean cumulative arterial drop over macular endpoints
  double dp_v = 0.0;
  double p_in = 0.0;
  double p_out = 0.0;
  VenousSign sign = VenousSign::paper;
  std::vector<PathDrop> per_path;
  std::vector<int> removed_artery_edges;
  std::vector<int> removed_vein_edges;
};

/// Leaves of each propagated tree that fall inside the macula, averaged per
/// class and combined into ΔP_AV. Throws DataError naming the class that has
/// no macular endpoint.
AvResult delta_p_av(const FlowGraph& art, const FlowGraph& ven, const SimConfig& cfg);

struct MorphStats {
  VesselClass cls = VesselClass::single;
  std::vector<double> branch_angles_deg;  // one per child
  std::vector<double> radius_continuity;  // per edge: std of its distance samples
  std::vector<double> asymmetry;          // per bifurcation
  double mean_branch_angle = 0.0;
  double mean_radius_continuity = 0.0;
  double mean_asymmetry = 0.0;
};

/// Branch angle 180° minus the angle between parent and child direction
/// vectors (first five polyline steps away from the node); radius continuity
/// as the mean per-edge standard deviation of distance samples; asymmetry
/// 1 - min/max of the two widest children.
MorphStats morph_stats(const VesselGraph& g);

}  // namespace vasctree
