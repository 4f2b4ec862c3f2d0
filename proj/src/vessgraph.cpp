#include "vasctree/vessgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>

#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"

namespace vasctree {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::branch: return "branch";
    case NodeKind::end: return "end";
    case NodeKind::anchor: return "anchor";
  }
  return "end";
}

NodeKind node_kind_from_string(const std::string& s) {
  if (s == "branch") return NodeKind::branch;
  if (s == "end") return NodeKind::end;
  if (s == "anchor") return NodeKind::anchor;
  throw DataError("unknown node kind '" + s + "'");
}

int VesselGraph::degree(int node) const {
  int d = 0;
  for (const auto& e : edges) d += (e.u == node) + (e.v == node);
  return d;
}

std::vector<int> VesselGraph::incident_edges(int node) const {
  std::vector<int> out;
  for (const auto& e : edges) {
    if (e.u == node || e.v == node) out.push_back(e.id);
  }
  return out;
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

int count_components(std::size_t n_nodes, const std::vector<std::pair<int, int>>& links) {
  DisjointSets ds(n_nodes);
  int c = static_cast<int>(n_nodes);
  for (const auto& [a, b] : links) c -= ds.unite(a, b) ? 1 : 0;
  return c;
}

}  // namespace

int VesselGraph::component_count() const {
  std::vector<std::pair<int, int>> links;
  for (const auto& e : edges) links.emplace_back(e.u, e.v);
  return count_components(nodes.size(), links);
}

int VesselGraph::cycle_rank() const {
  return static_cast<int>(edges.size()) - static_cast<int>(nodes.size()) + component_count();
}

double segment_radius(std::span<const double> samples) {
  if (samples.empty()) throw DataError("segment_radius: no distance samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const std::size_t drop = s.size() / 10;
  double sum = 0.0;
  for (std::size_t i = drop; i < s.size() - drop; ++i) sum += s[i];
  return sum / static_cast<double>(s.size() - 2 * drop);
}

namespace {

struct WorkNode {
  std::vector<std::size_t> cells;
  bool anchor = false;
  bool alive = true;
};

struct WorkEdge {
  int u = 0;
  int v = 0;
  std::vector<std::size_t> cells;
  std::vector<std::size_t> absorbed;
  bool alive = true;
};

// Node/edge decomposition of a unit-width skeleton.
class Tracer {
 public:
  Tracer(const MaskGrid& skel) : skel_(skel) {
    const auto& offs = neighbor_offsets(skel.ndim(), default_fg_connectivity(skel.ndim()));
    offsets_.assign(offs.begin(), offs.end());
    node_of_.assign(skel.size(), -1);
    degree_.assign(skel.size(), 0);
    for (std::size_t i = 0; i < skel.size(); ++i) {
      if (!skel[i]) continue;
      cells_.push_back(i);
      degree_[i] = static_cast<std::uint8_t>(skeleton_degree(skel, i));
    }
  }

  std::vector<WorkNode> nodes;
  std::vector<WorkEdge> edges;

  void run() {
    build_nodes();
    trace_chains();
    trace_loops();
  }

  template <class F>
  void for_neighbors(std::size_t i, F f) const {
    const Coord c = skel_.coord(i);
    for (const auto& o : offsets_) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!skel_.contains(n)) continue;
      const std::size_t ni = skel_.index(n);
      if (skel_[ni]) f(ni);
    }
  }

 private:
  void build_nodes() {
    const auto& face = neighbor_offsets(skel_.ndim(), default_bg_connectivity(skel_.ndim()));
    for (const std::size_t i : cells_) {
      if (node_of_[i] >= 0) continue;
      const int d = degree_[i];
      if (d == 2) continue;
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      node_of_[i] = id;
      nodes.back().cells.push_back(i);
      if (d < 2) continue;
      // branch cells cluster under face adjacency
      std::deque<std::size_t> queue{i};
      while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        const Coord c = skel_.coord(cur);
        for (const auto& o : face) {
          const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
          if (!skel_.contains(n)) continue;
          const std::size_t ni = skel_.index(n);
          if (!skel_[ni] || node_of_[ni] >= 0 || degree_[ni] < 3) continue;
          node_of_[ni] = id;
          nodes.back().cells.push_back(ni);
          queue.push_back(ni);
        }
      }
      std::sort(nodes.back().cells.begin(), nodes.back().cells.end());
    }
  }

  void add_edge(std::vector<std::size_t> cells) {
    WorkEdge e;
    e.u = node_of_[cells.front()];
    e.v = node_of_[cells.back()];
    e.cells = std::move(cells);
    edges.push_back(std::move(e));
  }

  void trace_chains() {
    visited_.assign(skel_.size(), 0);
    for (const auto& node : nodes) {
      for (const std::size_t a : node.cells) {
        std::vector<std::size_t> nbs;
        for_neighbors(a, [&](std::size_t n) { nbs.push_back(n); });
        for (const std::size_t n : nbs) {
          if (node_of_[n] >= 0) {
            // direct contact between two node cells of different clusters
            if (node_of_[n] != node_of_[a] && n > a) add_edge({a, n});
            continue;
          }
          if (visited_[n]) continue;
          std::vector<std::size_t> path{a, n};
          visited_[n] = 1;
          std::size_t prev = a, cur = n;
          for (;;) {
            std::size_t next = cur;
            for_neighbors(cur, [&](std::size_t m) {
              if (m != prev && next == cur) next = m;
            });
            path.push_back(next);
            if (node_of_[next] >= 0 || visited_[next]) break;
            visited_[next] = 1;
            prev = cur;
            cur = next;
          }
          add_edge(std::move(path));
        }
      }
    }
  }

  // Closed chains that contain no node: anchor a node at the first cell.
  void trace_loops() {
    for (const std::size_t i : cells_) {
      if (node_of_[i] >= 0 || visited_[i]) continue;
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.back().cells.push_back(i);
      nodes.back().anchor = true;
      node_of_[i] = id;
      visited_[i] = 1;
      std::vector<std::size_t> path{i};
      std::size_t prev = i, cur = i;
      for (;;) {
        std::size_t next = cur;
        for_neighbors(cur, [&](std::size_t m) {
          if (m != prev && next == cur) next = m;
        });
        path.push_back(next);
        if (next == i || visited_[next]) break;
        visited_[next] = 1;
        prev = cur;
        cur = next;
      }
      add_edge(std::move(path));
    }
  }

  const MaskGrid& skel_;
  std::vector<Coord> offsets_;
  std::vector<std::size_t> cells_;
  std::vector<int> node_of_;
  std::vector<std::uint8_t> degree_;
  std::vector<std::uint8_t> visited_;
};

double step_length(const Coord& a, const Coord& b) {
  const int nz = (a[0] != b[0]) + (a[1] != b[1]) + (a[2] != b[2]);
  return std::sqrt(static_cast<double>(nz));
}

// Multilinear interpolation of the foreground indicator (dist > 0); cells
// outside the grid are background.
double occupancy(const ScalarField& dist, const std::array<double, 3>& q) {
  const int nd = dist.ndim();
  std::array<long, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int a = 0; a < nd; ++a) {
    base[a] = static_cast<long>(std::floor(q[a]));
    frac[a] = q[a] - static_cast<double>(base[a]);
  }
  double v = 0.0;
  const int corners = 1 << nd;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    Coord p{0, 0, 0};
    for (int a = 0; a < nd; ++a) {
      const int bit = (c >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      p[a] = static_cast<int>(base[a] + bit);
    }
    if (w == 0.0 || !dist.contains(p)) continue;
    if (dist.at(p) > 0.0) v += w;
  }
  return v;
}

// Distance from p along unit direction d to the 0.5 level of the occupancy.
double boundary_crossing(const ScalarField& dist, const std::array<double, 3>& p, const std::array<double, 3>& d,
                         double limit) {
  constexpr double step = 0.05;
  double prev = occupancy(dist, p);
  if (prev < 0.5) return 0.0;
  for (double t = step; t <= limit; t += step) {
    const std::array<double, 3> q{p[0] + t * d[0], p[1] + t * d[1], p[2] + t * d[2]};
    const double f = occupancy(dist, q);
    if (f < 0.5) return t - step + step * (prev - 0.5) / (prev - f);
    prev = f;
  }
  return limit;
}

std::array<double, 3> normalized(std::array<double, 3> v) {
  const double n = std::hypot(v[0], v[1], v[2]);
  if (n > 0.0) {
    for (auto& x : v) x /= n;
  }
  return v;
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Radius at position k of a traced centreline in the distance transform's
// convention (centre to the nearest background cell centre): half the mean
// cross-section diameter, measured to the half-occupancy boundary along
// normals of the local tangent (one in 2D, four in 3D), plus half a cell.
double cross_section_radius(const ScalarField& dist, const std::vector<std::size_t>& cells, std::size_t k) {
  constexpr std::size_t window = 3;
  const std::size_t lo = k >= window ? k - window : 0;
  const std::size_t hi = std::min(cells.size() - 1, k + window);
  const Coord a = dist.coord(cells[lo]), b = dist.coord(cells[hi]), c = dist.coord(cells[k]);
  const std::array<double, 3> p{static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])};
  const double limit = 2.0 * dist[cells[k]] + 4.0;
  std::array<double, 3> t = normalized({static_cast<double>(b[0] - a[0]), static_cast<double>(b[1] - a[1]),
                                        static_cast<double>(b[2] - a[2])});
  if (lo == hi) return dist[cells[k]];
  std::vector<std::array<double, 3>> normals;
  if (dist.ndim() == 2) {
    normals.push_back({-t[1], t[0], 0.0});
  } else {
    const std::array<double, 3> helper = std::abs(t[0]) < 0.9 ? std::array<double, 3>{1.0, 0.0, 0.0}
                                                             : std::array<double, 3>{0.0, 1.0, 0.0};
    const auto e1 = normalized(cross(t, helper));
    const auto e2 = cross(t, e1);
    const double h = std::sqrt(0.5);
    normals = {e1, e2, {h * (e1[0] + e2[0]), h * (e1[1] + e2[1]), h * (e1[2] + e2[2])},
               {h * (e1[0] - e2[0]), h * (e1[1] - e2[1]), h * (e1[2] - e2[2])}};
  }
  double diameter = 0.0;
  for (const auto& n : normals) {
    diameter += boundary_crossing(dist, p, n, limit);
    diameter += boundary_crossing(dist, p, {-n[0], -n[1], -n[2]}, limit);
  }
  return diameter / (2.0 * static_cast<double>(normals.size())) + 0.5;
}

// Moat removal, debris contraction and pass-through dissolution.
class Pruner {
 public:
  Pruner(Tracer& t, const MaskGrid& skel, const ScalarField& dist, const ExtractOptions& opt)
      : t_(t), skel_(skel), dist_(dist), opt_(opt) {}

  std::vector<double> arc(const std::vector<std::size_t>& cells) const {
    std::vector<double> s(cells.size(), 0.0);
    for (std::size_t k = 1; k < cells.size(); ++k) {
      s[k] = s[k - 1] + step_length(skel_.coord(cells[k - 1]), skel_.coord(cells[k]));
    }
    return s;
  }

  double moat(int node) const {
    double m = 0.0;
    for (const std::size_t c : t_.nodes[static_cast<std::size_t>(node)].cells) m = std::max(m, dist_[c]);
    return std::max(static_cast<double>(opt_.min_moat), std::ceil(m - 1e-9));
  }

  /// Positions along the edge outside both moats.
  std::vector<std::size_t> residual(const WorkEdge& e) const {
    const auto s = arc(e.cells);
    const double len = s.back();
    const double ru = moat(e.u), rv = moat(e.v);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < e.cells.size(); ++k) {
      if (s[k] > ru && len - s[k] > rv) out.push_back(k);
    }
    return out;
  }

  void run() {
    bool changed = true;
    while (changed) {
      changed = contract();
      changed = dissolve() || changed;
    }
  }

 private:
  std::vector<int> degrees() const {
    std::vector<int> d(t_.nodes.size(), 0);
    for (const auto& e : t_.edges) {
      if (!e.alive) continue;
      ++d[static_cast<std::size_t>(e.u)];
      ++d[static_cast<std::size_t>(e.v)];
    }
    return d;
  }

  bool contract() {
    auto deg = degrees();
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k < t_.edges.size(); ++k) {
      const auto& e = t_.edges[k];
      if (!e.alive || e.u == e.v) continue;
      order.emplace_back(arc(e.cells).back(), k);
    }
    std::sort(order.begin(), order.end());
    std::vector<std::uint8_t> touched(t_.nodes.size(), 0);
    bool changed = false;
    for (const auto& [len, k] : order) {
      auto& e = t_.edges[k];
      const auto u = static_cast<std::size_t>(e.u), v = static_cast<std::size_t>(e.v);
      if (touched[u] || touched[v]) continue;
      if (std::max(deg[u], deg[v]) < 3) continue;
      if (residual(e).size() >= opt_.min_residual) continue;
      touched[u] = touched[v] = 1;
      changed = true;
      e.alive = false;
      if (std::min(deg[u], deg[v]) == 1) {
        // spur: the end node and its edge fold into the branch node
        const std::size_t keep = deg[u] == 1 ? v : u;
        const std::size_t drop = keep == u ? v : u;
        absorb(keep, drop, e);
        continue;
      }
      const std::size_t keep = std::min(u, v), drop = std::max(u, v);
      absorb(keep, drop, e);
      for (auto& other : t_.edges) {
        if (!other.alive) continue;
        if (other.u == static_cast<int>(drop)) other.u = static_cast<int>(keep);
        if (other.v == static_cast<int>(drop)) other.v = static_cast<int>(keep);
      }
    }
    return changed;
  }

  void absorb(std::size_t keep, std::size_t drop, const WorkEdge& e) {
    auto& dst = t_.nodes[keep].cells;
    auto& src = t_.nodes[drop];
    dst.insert(dst.end(), src.cells.begin(), src.cells.end());
    dst.insert(dst.end(), e.cells.begin(), e.cells.end());
    dst.insert(dst.end(), e.absorbed.begin(), e.absorbed.end());
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    src.alive = false;
    src.cells.clear();
  }

  // Shortest 8/26-adjacent path between two cells inside a node's cells.
  std::vector<std::size_t> inner_path(const std::vector<std::size_t>& cells, std::size_t from,
                                      std::size_t to) const {
    if (from == to) return {from};
    std::map<std::size_t, std::size_t> parent{{from, from}};
    std::deque<std::size_t> queue{from};
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      if (cur == to) break;
      t_.for_neighbors(cur, [&](std::size_t n) {
        if (parent.count(n) || !std::binary_search(cells.begin(), cells.end(), n)) return;
        parent[n] = cur;
        queue.push_back(n);
      });
    }
    if (!parent.count(to)) return {from, to};
    std::vector<std::size_t> path{to};
    while (path.back() != from) path.push_back(parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  bool dissolve() {
    bool changed = false;
    std::vector<std::vector<std::size_t>> incident(t_.nodes.size());
    for (std::size_t k = 0; k < t_.edges.size(); ++k) {
      const auto& e = t_.edges[k];
      if (!e.alive) continue;
      incident[static_cast<std::size_t>(e.u)].push_back(k);
      if (e.v != e.u) incident[static_cast<std::size_t>(e.v)].push_back(k);
    }
    for (std::size_t n = 0; n < t_.nodes.size(); ++n) {
      auto& node = t_.nodes[n];
      if (!node.alive || incident[n].size() != 2) continue;
      const std::size_t k1 = incident[n][0], k2 = incident[n][1];
      WorkEdge e1 = t_.edges[k1], e2 = t_.edges[k2];
      if (e1.u == e1.v || e2.u == e2.v) continue;
      const int ni = static_cast<int>(n);
      if (e1.v != ni) {
        std::reverse(e1.cells.begin(), e1.cells.end());
        std::swap(e1.u, e1.v);
      }
      if (e2.u != ni) {
        std::reverse(e2.cells.begin(), e2.cells.end());
        std::swap(e2.u, e2.v);
      }
      const auto path = inner_path(node.cells, e1.cells.back(), e2.cells.front());
      WorkEdge joined;
      joined.u = e1.u;
      joined.v = e2.v;
      joined.cells = e1.cells;
      joined.cells.insert(joined.cells.end(), path.begin() + 1, path.end());
      joined.cells.insert(joined.cells.end(), e2.cells.begin() + 1, e2.cells.end());
      joined.absorbed = e1.absorbed;
      joined.absorbed.insert(joined.absorbed.end(), e2.absorbed.begin(), e2.absorbed.end());
      for (const std::size_t c : node.cells) {
        if (std::find(path.begin(), path.end(), c) == path.end()) joined.absorbed.push_back(c);
      }
      t_.edges[k1].alive = false;
      t_.edges[k2].alive = false;
      node.alive = false;
      node.cells.clear();
      const std::size_t nk = t_.edges.size();
      t_.edges.push_back(std::move(joined));
      for (const int end : {t_.edges[nk].u, t_.edges[nk].v}) {
        auto& inc = incident[static_cast<std::size_t>(end)];
        inc.erase(std::remove_if(inc.begin(), inc.end(), [&](std::size_t x) { return x == k1 || x == k2; }),
                  inc.end());
        if (std::find(inc.begin(), inc.end(), nk) == inc.end()) inc.push_back(nk);
      }
      changed = true;
    }
    return changed;
  }

  Tracer& t_;
  const MaskGrid& skel_;
  const ScalarField& dist_;
  const ExtractOptions& opt_;
};

std::size_t representative(const std::vector<std::size_t>& cells, const MaskGrid& g) {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  for (const std::size_t c : cells) {
    const Coord p = g.coord(c);
    for (int a = 0; a < 3; ++a) mean[a] += p[a];
  }
  for (auto& m : mean) m /= static_cast<double>(cells.size());
  std::size_t best = cells.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const std::size_t c : cells) {
    const Coord p = g.coord(c);
    double d = 0.0;
    for (int a = 0; a < 3; ++a) d += (p[a] - mean[a]) * (p[a] - mean[a]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

VesselGraph graph_from_skeleton(const MaskGrid& skel, const ScalarField& dist, const ExtractOptions& options) {
  require_same_shape(skel, dist, "graph_from_skeleton");
  VesselGraph g;
  g.spacing = skel.spacing();
  g.ndim = skel.ndim();
  g.cls = options.cls;
  double smallest = skel.spacing()[0];
  for (int a = 1; a < skel.ndim(); ++a) smallest = std::min(smallest, skel.spacing()[a]);
  g.scale = options.scale.value_or(smallest);
  if (!(g.scale > 0.0)) throw DataError("graph scale factor must be positive");

  Tracer tracer(skel);
  tracer.run();
  Pruner pruner(tracer, skel, dist, options);
  pruner.run();

  // node ids follow the raster order of each node's representative cell
  std::vector<std::pair<std::size_t, std::size_t>> reps;
  for (std::size_t n = 0; n < tracer.nodes.size(); ++n) {
    if (tracer.nodes[n].alive) reps.emplace_back(representative(tracer.nodes[n].cells, skel), n);
  }
  std::sort(reps.begin(), reps.end());
  std::vector<int> new_id(tracer.nodes.size(), -1);
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& [rep, n] = reps[k];
    new_id[n] = static_cast<int>(k);
    GraphNode node;
    node.id = static_cast<int>(k);
    node.pos = skel.coord(rep);
    node.cells = tracer.nodes[n].cells;
    g.nodes.push_back(std::move(node));
  }

  struct Pending {
    GraphEdge edge;
    std::vector<std::size_t> cells;
  };
  std::vector<Pending> pending;
  for (const auto& e : tracer.edges) {
    if (!e.alive) continue;
    Pending p;
    p.cells = e.cells;
    p.edge.u = new_id[static_cast<std::size_t>(e.u)];
    p.edge.v = new_id[static_cast<std::size_t>(e.v)];
    if (p.edge.u > p.edge.v) {
      std::swap(p.edge.u, p.edge.v);
      std::reverse(p.cells.begin(), p.cells.end());
    } else if (p.edge.u == p.edge.v) {
      std::vector<std::size_t> rev(p.cells.rbegin(), p.cells.rend());
      if (rev < p.cells) p.cells = std::move(rev);
    }
    auto positions = pruner.residual(e);
    GraphEdge& out = p.edge;
    out.low_confidence = positions.size() < options.min_residual;
    if (positions.empty()) {
      positions.resize(e.cells.size());
      std::iota(positions.begin(), positions.end(), std::size_t{0});
    }
    std::vector<double> samples;
    for (const std::size_t k : positions) samples.push_back(cross_section_radius(dist, e.cells, k));
    if (out.low_confidence) {
      out.radius_px = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    } else {
      out.radius_px = segment_radius(samples);
    }
    if (!(out.radius_px > 0.0)) throw DataError("graph edge has a non-positive radius (skeleton outside the mask?)");
    out.samples = std::move(samples);
    out.radius_um = out.radius_px * g.scale;
    out.cls = options.cls;
    out.absorbed = e.absorbed;
    for (std::size_t k = 0; k < p.cells.size(); ++k) {
      out.polyline.push_back(skel.coord(p.cells[k]));
      if (k > 0) out.length_px += step_length(out.polyline[k - 1], out.polyline[k]);
    }
    pending.push_back(std::move(p));
  }
  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.edge.u != b.edge.u) return a.edge.u < b.edge.u;
    if (a.edge.v != b.edge.v) return a.edge.v < b.edge.v;
    return a.cells < b.cells;
  });
  for (auto& p : pending) {
    p.edge.id = static_cast<int>(g.edges.size());
    g.edges.push_back(std::move(p.edge));
  }
  for (auto& node : g.nodes) {
    const int d = g.degree(node.id);
    node.kind = d >= 3 ? NodeKind::branch : d == 2 ? NodeKind::anchor : NodeKind::end;
  }
  return g;
}

VesselGraph extract_graph(const MaskGrid& labels, const ExtractOptions& options) {
  const MaskGrid mask = class_mask(labels, options.cls);
  if (count_foreground(mask) == 0) {
    VesselGraph g;
    g.spacing = labels.spacing();
    g.ndim = labels.ndim();
    g.cls = options.cls;
    double smallest = labels.spacing()[0];
    for (int a = 1; a < labels.ndim(); ++a) smallest = std::min(smallest, labels.spacing()[a]);
    g.scale = options.scale.value_or(smallest);
    return g;
  }
  const ScalarField dist = edt(mask, VesselClass::single, EdtUnits::pixels);
  const MaskGrid skel = thin(mask);
  return graph_from_skeleton(skel, dist, options);
}

int skeleton_cycle_rank(const MaskGrid& skel) {
  Tracer tracer(skel);
  tracer.run();
  std::vector<std::pair<int, int>> links;
  for (const auto& e : tracer.edges) links.emplace_back(e.u, e.v);
  return static_cast<int>(tracer.edges.size()) - static_cast<int>(tracer.nodes.size()) +
         count_components(tracer.nodes.size(), links);
}

std::vector<BifurcationRecord> bifurcations(const VesselGraph& g) {
  std::vector<BifurcationRecord> out;
  for (const auto& node : g.nodes) {
    const auto inc = g.incident_edges(node.id);
    if (inc.size() < 3) continue;
    auto wider = [&](int a, int b) {
      const auto& ea = g.edges[static_cast<std::size_t>(a)];
      const auto& eb = g.edges[static_cast<std::size_t>(b)];
      if (ea.radius_px != eb.radius_px) return ea.radius_px > eb.radius_px;
      if (ea.length_px != eb.length_px) return ea.length_px > eb.length_px;
      return a < b;
    };
    const int parent = *std::min_element(inc.begin(), inc.end(), wider);
    BifurcationRecord r;
    r.node = node.id;
    r.parent_edge = parent;
    r.parent_px = g.edges[static_cast<std::size_t>(parent)].radius_px;
    r.parent_um = g.edges[static_cast<std::size_t>(parent)].radius_um;
    r.cls = g.cls;
    for (const int e : inc) {
      if (e == parent) continue;
      r.child_edges.push_back(e);
      r.children_px.push_back(g.edges[static_cast<std::size_t>(e)].radius_px);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<double> dataset_pixel_size(const std::string& dataset) {
  static const std::map<std::string, double> sizes{
      {"RITE", 21.1},     {"LES-AV", 5.43}, {"F-AVSeg", 9.22}, {"HRF-AV", 4.81},
      {"ImageCAS", 0.70}, {"CCA", 0.60},    {"MIDAS", 1.14},
  };
  const auto it = sizes.find(dataset);
  if (it == sizes.end()) return std::nullopt;
  return it->second;
}

double um_per_px_from_fov(double fov_degrees, double fov_pixels) {
  if (!(fov_degrees > 0.0) || !(fov_pixels > 0.0)) {
    throw DataError("field of view and its pixel extent must be positive");
  }
  return fov_degrees * 260.0 / fov_pixels;
}

}  // namespace vasctree
