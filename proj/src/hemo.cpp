#include "vasctree/hemo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>

namespace vasctree {

const char* to_string(VenousSign s) { return s == VenousSign::physical ? "physical" : "paper"; }

VenousSign venous_sign_from_string(const std::string& s) {
  if (s == "paper") return VenousSign::paper;
  if (s == "physical") return VenousSign::physical;
  throw DataError("unknown venous sign '" + s + "' (expected paper or physical)");
}

void validate(const SimConfig& cfg) {
  if (!(cfg.p_in > cfg.p_out)) throw DataError("inlet pressure must exceed outlet pressure");
  if (!(cfg.eta >= 0.0) || !std::isfinite(cfg.eta)) throw DataError("viscosity must be finite and >= 0");
  if (!(cfg.k > 0.0) || !std::isfinite(cfg.k)) throw DataError("pressure calibration K must be positive");
  if (!(cfg.macula_radius >= 0.0)) throw DataError("macula radius must be >= 0");
}

std::vector<double> partition_flow(double q0, std::span<const double> radii, double alpha) {
  if (!(q0 >= 0.0)) throw DataError("partition_flow: inflow must be >= 0");
  if (radii.empty()) throw DataError("partition_flow: no children");
  for (const double r : radii) {
    if (!(r > 0.0)) throw DataError("partition_flow: radii must be positive");
  }
  std::vector<double> x(radii.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = alpha * std::log(radii[i]);
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (const double v : x) z += std::exp(v - m);
  std::vector<double> q(radii.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = q0 * std::exp(x[i] - m) / z;
  // the widest child absorbs the rounding so the shares add up to q0
  const auto big = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (i == big) continue;
    const double y = q[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  q[big] = q0 - sum;
  return q;
}

double poiseuille_resistance(double length_px, double radius_px, double eta) {
  if (!(radius_px > 0.0)) throw DataError("Poiseuille: radius must be positive");
  if (!(length_px >= 0.0)) throw DataError("Poiseuille: length must be >= 0");
  return 8.0 * eta * length_px / (std::numbers::pi * std::pow(radius_px, 4));
}

double poiseuille_dp(double q, double length_px, double radius_px, double eta, double k) {
  return k * std::abs(q) * poiseuille_resistance(length_px, radius_px, eta);
}

namespace {

double dist2(const Coord& c, const std::array<double, 3>& p) {
  double d = 0.0;
  for (int a = 0; a < 3; ++a) d += (c[a] - p[a]) * (c[a] - p[a]);
  return d;
}

int find_root(std::vector<int>& parent, int a) {
  while (parent[static_cast<std::size_t>(a)] != a) {
    parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    a = parent[static_cast<std::size_t>(a)];
  }
  return a;
}

void index_edges(FlowGraph& fg) {
  const std::size_t n = fg.node_pos.size();
  fg.parent_edge.assign(n, -1);
  fg.out_edges.assign(n, {});
  for (std::size_t k = 0; k < fg.edges.size(); ++k) {
    const auto& e = fg.edges[k];
    if (fg.parent_edge[static_cast<std::size_t>(e.to)] >= 0) {
      throw DataError("flow graph node " + std::to_string(e.to) + " has two incoming edges (cycle)");
    }
    fg.parent_edge[static_cast<std::size_t>(e.to)] = static_cast<int>(k);
    fg.out_edges[static_cast<std::size_t>(e.from)].push_back(static_cast<int>(k));
  }
}

}  // namespace

FlowGraph root_and_orient(const VesselGraph& g, const std::array<double, 3>& disc, double eta) {
  if (g.nodes.empty()) throw DataError("cannot simulate flow on an empty graph");
  FlowGraph fg;
  fg.cls = g.cls;
  const std::size_t n = g.nodes.size();
  for (const auto& node : g.nodes) fg.node_pos.push_back(node.pos);

  // minimum-resistance spanning forest; ties go to the lower edge id
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> res(g.edges.size());
  for (const auto& e : g.edges) {
    res[static_cast<std::size_t>(e.id)] = poiseuille_resistance(e.length_px, e.radius_px, 1.0);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return res[static_cast<std::size_t>(a)] < res[static_cast<std::size_t>(b)];
  });
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbour, edge id)
  for (const int id : order) {
    const auto& e = g.edges[static_cast<std::size_t>(id)];
    const int a = find_root(uf, e.u), b = find_root(uf, e.v);
    if (a == b) {
      fg.removed_edges.push_back(id);
      continue;
    }
    uf[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    adj[static_cast<std::size_t>(e.u)].emplace_back(e.v, id);
    adj[static_cast<std::size_t>(e.v)].emplace_back(e.u, id);
  }
  std::sort(fg.removed_edges.begin(), fg.removed_edges.end());
  for (auto& a : adj) std::sort(a.begin(), a.end());

  // root of each component: the node nearest the disc, lowest id on ties
  std::vector<int> best(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = static_cast<std::size_t>(find_root(uf, static_cast<int>(v)));
    if (best[c] < 0 || dist2(g.nodes[v].pos, disc) < dist2(g.nodes[static_cast<std::size_t>(best[c])].pos, disc)) {
      best[c] = static_cast<int>(v);
    }
  }
  for (const int r : best) {
    if (r >= 0) fg.roots.push_back(r);
  }
  std::sort(fg.roots.begin(), fg.roots.end());

  std::vector<std::uint8_t> seen(n, 0);
  for (const int r : fg.roots) {
    std::deque<int> queue{r};
    seen[static_cast<std::size_t>(r)] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (const auto& [w, id] : adj[static_cast<std::size_t>(v)]) {
        if (seen[static_cast<std::size_t>(w)]) continue;
        seen[static_cast<std::size_t>(w)] = 1;
        const auto& e = g.edges[static_cast<std::size_t>(id)];
        FlowEdge fe;
        fe.edge = id;
        fe.from = v;
        fe.to = w;
        fe.length_px = e.length_px;
        fe.radius_px = e.radius_px;
        fe.radius_um = e.radius_um;
        fe.resistance = poiseuille_resistance(e.length_px, e.radius_px, eta);
        fg.edges.push_back(fe);
        queue.push_back(w);
      }
    }
  }
  index_edges(fg);
  fg.cum_dp.assign(n, 0.0);
  fg.pressure.assign(n, std::numeric_limits<double>::quiet_NaN());
  return fg;
}

FlowGraph propagate(const FlowGraph& input, const SimConfig& cfg, const ExponentTable& table) {
  validate(cfg);
  FlowGraph fg = input;
  const std::size_t n = fg.node_pos.size();
  for (const auto& e : fg.edges) {
    if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(e.from) >= n || static_cast<std::size_t>(e.to) >= n) {
      throw DataError("flow edge references a missing node");
    }
  }
  index_edges(fg);
  for (const int r : fg.roots) {
    if (fg.parent_edge[static_cast<std::size_t>(r)] >= 0) throw DataError("flow graph root has an incoming edge");
  }
  const bool venous = fg.cls == VesselClass::vein;
  std::vector<double> inflow(n, 0.0);
  std::vector<std::uint8_t> seen(n, 0);
  std::size_t visited_edges = 0;
  for (const int r : fg.roots) {
    std::deque<int> queue{r};
    inflow[static_cast<std::size_t>(r)] = 1.0;
    fg.cum_dp[static_cast<std::size_t>(r)] = 0.0;
    seen[static_cast<std::size_t>(r)] = 1;
    while (!queue.empty()) {
      const auto v = static_cast<std::size_t>(queue.front());
      queue.pop_front();
      const auto& outs = fg.out_edges[v];
      if (outs.empty()) continue;
      std::vector<double> radii;
      double widest_um = 0.0;
      for (const int k : outs) {
        radii.push_back(fg.edges[static_cast<std::size_t>(k)].radius_px);
        widest_um = std::max(widest_um, fg.edges[static_cast<std::size_t>(k)].radius_um);
      }
      const int pe = fg.parent_edge[v];
      const double parent_um = pe >= 0 ? fg.edges[static_cast<std::size_t>(pe)].radius_um : widest_um;
      const double alpha = table.lookup(parent_um);
      const auto q = partition_flow(inflow[v], radii, alpha);
      for (std::size_t c = 0; c < outs.size(); ++c) {
        auto& e = fg.edges[static_cast<std::size_t>(outs[c])];
        const auto w = static_cast<std::size_t>(e.to);
        if (seen[w]) throw DataError("flow graph contains a cycle");
        seen[w] = 1;
        ++visited_edges;
        e.q = q[c];
        e.resistance = poiseuille_resistance(e.length_px, e.radius_px, cfg.eta);
        e.dp = poiseuille_dp(e.q, e.length_px, e.radius_px, cfg.eta, cfg.k);
        inflow[w] = e.q;
        fg.cum_dp[w] = fg.cum_dp[v] + e.dp;
        queue.push_back(e.to);
      }
    }
  }
  if (visited_edges != fg.edges.size()) throw DataError("flow graph edges are not reachable from the roots (cycle)");
  for (std::size_t v = 0; v < n; ++v) {
    if (!seen[v]) continue;
    fg.pressure[v] = venous ? cfg.p_out + fg.cum_dp[v] : cfg.p_in - fg.cum_dp[v];
  }
  fg.propagated = true;
  return fg;
}

AvResult delta_p_av(const FlowGraph& art, const FlowGraph& ven, const SimConfig& cfg) {
  validate(cfg);
  if (!art.propagated || !ven.propagated) throw DataError("delta_p_av: graphs must be propagated first");
  AvResult out;
  out.p_in = cfg.p_in;
  out.p_out = cfg.p_out;
  out.sign = cfg.sign;
  out.removed_artery_edges = art.removed_edges;
  out.removed_vein_edges = ven.removed_edges;
  const double r2 = cfg.macula_radius * cfg.macula_radius;
  auto macular_mean = [&](const FlowGraph& fg, VesselClass cls) {
    std::vector<double> drops;
    // breadth-first from each root; leaves inside the macula are path ends
    for (const int r : fg.roots) {
      std::deque<int> queue{r};
      while (!queue.empty()) {
        const auto v = static_cast<std::size_t>(queue.front());
        queue.pop_front();
        const auto& outs = fg.out_edges[v];
        for (const int k : outs) queue.push_back(fg.edges[static_cast<std::size_t>(k)].to);
        if (!outs.empty() || static_cast<int>(v) == r) continue;
        if (dist2(fg.node_pos[v], cfg.macula_center) > r2) continue;
        out.per_path.push_back({static_cast<int>(v), fg.node_pos[v], fg.cum_dp[v], cls});
        drops.push_back(fg.cum_dp[v]);
      }
    }
    if (drops.empty()) {
      throw DataError(std::string("no ") + to_string(cls) + " endpoint lies inside the macula region");
    }
    std::sort(drops.begin(), drops.end());
    double sum = 0.0;
    for (const double d : drops) sum += d;
    return sum / static_cast<double>(drops.size());
  };
  out.dp_a = macular_mean(art, VesselClass::artery);
  out.dp_v = macular_mean(ven, VesselClass::vein);
  const double base = cfg.p_in - cfg.p_out;
  out.delta_p_av = cfg.sign == VenousSign::paper ? base - (out.dp_a - out.dp_v) : base - (out.dp_a + out.dp_v);
  return out;
}

namespace {

std::array<double, 3> direction_from(const VesselGraph& g, const GraphEdge& e, int node) {
  std::vector<Coord> pts = e.polyline;
  if (e.u != node) std::reverse(pts.begin(), pts.end());
  const std::size_t k = std::min<std::size_t>(5, pts.size() - 1);
  std::array<double, 3> v{0.0, 0.0, 0.0};
  for (int a = 0; a < 3; ++a) v[a] = (pts[k][a] - pts[0][a]) * (a < g.ndim ? 1.0 : 0.0);
  return v;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

MorphStats morph_stats(const VesselGraph& g) {
  MorphStats s;
  s.cls = g.cls;
  for (const auto& rec : bifurcations(g)) {
    const auto& pe = g.edges[static_cast<std::size_t>(rec.parent_edge)];
    if (pe.u == pe.v) continue;
    const auto pv = direction_from(g, pe, rec.node);
    const double pn = std::hypot(pv[0], pv[1], pv[2]);
    std::vector<double> kids;
    for (const int ce : rec.child_edges) {
      const auto& e = g.edges[static_cast<std::size_t>(ce)];
      kids.push_back(e.radius_px);
      if (e.u == e.v) continue;
      const auto cv = direction_from(g, e, rec.node);
      const double cn = std::hypot(cv[0], cv[1], cv[2]);
      if (pn == 0.0 || cn == 0.0) continue;
      const double cosang = std::clamp((pv[0] * cv[0] + pv[1] * cv[1] + pv[2] * cv[2]) / (pn * cn), -1.0, 1.0);
      s.branch_angles_deg.push_back(180.0 - std::acos(cosang) * 180.0 / std::numbers::pi);
    }
    std::sort(kids.begin(), kids.end(), std::greater<>());
    if (kids.size() >= 2 && kids[0] > 0.0) s.asymmetry.push_back(1.0 - kids[1] / kids[0]);
  }
  for (const auto& e : g.edges) {
    if (e.samples.size() < 2) continue;
    const double m = mean(e.samples);
    double ss = 0.0;
    for (const double x : e.samples) ss += (x - m) * (x - m);
    s.radius_continuity.push_back(std::sqrt(ss / static_cast<double>(e.samples.size())));
  }
  s.mean_branch_angle = mean(s.branch_angles_deg);
  s.mean_radius_continuity = mean(s.radius_continuity);
  s.mean_asymmetry = mean(s.asymmetry);
  return s;
}

}  // namespace vasctree
