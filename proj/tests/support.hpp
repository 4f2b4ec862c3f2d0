#pragma once

// Independent reference implementations and random input generators shared by
// the unit tests. Oracles deliberately use the slowest obvious algorithm.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "vasctree/grid.hpp"
#include "vasctree/loss.hpp"
#include "vasctree/murray.hpp"
#include "vasctree/vessgraph.hpp"

namespace vt_test {

using vasctree::Coord;
using vasctree::MaskGrid;
using vasctree::ScalarField;
using vasctree::Shape;

// Generators ------------------------------------------------------------------

/// Sparse salt-and-pepper mask with the given foreground probability.
inline MaskGrid random_noise(std::mt19937_64& rng, Shape shape, double density) {
  MaskGrid m(shape);
  std::bernoulli_distribution fg(density);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = fg(rng) ? 1 : 0;
  return m;
}

/// Union of random discs, rectangles and annuli: blobby masks with holes.
inline MaskGrid random_shapes(std::mt19937_64& rng, std::size_t nx, std::size_t ny, int count) {
  MaskGrid m(Shape::make2d(nx, ny));
  std::uniform_int_distribution<int> px(0, static_cast<int>(nx) - 1), py(0, static_cast<int>(ny) - 1);
  std::uniform_int_distribution<int> kind(0, 3), size(1, 6);
  for (int s = 0; s < count; ++s) {
    const int cx = px(rng), cy = py(rng), r = size(rng), k = kind(rng);
    const int inner = std::max(0, r - 2);
    for (int y = 0; y < static_cast<int>(ny); ++y) {
      for (int x = 0; x < static_cast<int>(nx); ++x) {
        const int dx = x - cx, dy = y - cy, d2 = dx * dx + dy * dy;
        bool on = false;
        if (k == 0) on = d2 <= r * r;
        else if (k == 1) on = std::abs(dx) <= r && std::abs(dy) <= r / 2;
        else if (k == 2) on = d2 <= r * r && d2 > inner * inner;
        else on = std::abs(dx - dy) <= 1 && std::abs(dx) <= r;
        if (on) m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 1;
      }
    }
  }
  return m;
}

/// Either noise or shapes, so both thin speckle and solid blobs are covered.
inline MaskGrid random_mask(std::mt19937_64& rng, std::size_t nx, std::size_t ny) {
  std::uniform_int_distribution<int> pick(0, 2);
  const int k = pick(rng);
  if (k == 0) return random_noise(rng, Shape::make2d(nx, ny), 0.35);
  if (k == 1) return random_noise(rng, Shape::make2d(nx, ny), 0.6);
  return random_shapes(rng, nx, ny, 6);
}

inline MaskGrid random_mask_3d(std::mt19937_64& rng, std::size_t n, double density) {
  return random_noise(rng, Shape::make3d(n, n, n), density);
}

// Oracles ---------------------------------------------------------------------

/// O(n^2) nearest-background distance with per-axis step weights.
inline ScalarField brute_edt(const MaskGrid& m, std::array<double, 3> w = {1.0, 1.0, 1.0}) {
  ScalarField out(m.shape(), m.spacing(), 0.0);
  std::vector<Coord> bg;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) bg.push_back(m.coord(i));
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = m.coord(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bg) {
      double d = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double s = (c[a] - b[a]) * w[a];
        d += s * s;
      }
      best = std::min(best, d);
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

inline bool adjacent(const Coord& a, const Coord& b, int connectivity) {
  const int dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]), dz = std::abs(a[2] - b[2]);
  if (std::max({dx, dy, dz}) != 1) return false;
  const int nz = (dx != 0) + (dy != 0) + (dz != 0);
  if (connectivity == 4 || connectivity == 6) return nz == 1;
  if (connectivity == 18) return nz <= 2;
  return true;  // 8 or 26
}

/// Flood fill with an explicit stack; returns the component count of cells
/// whose value equals `value`.
inline int flood_count(const MaskGrid& m, std::uint8_t value, int connectivity) {
  std::vector<std::uint8_t> seen(m.size(), 0);
  int count = 0;
  const int r = 1;
  for (std::size_t s = 0; s < m.size(); ++s) {
    if (seen[s] || (m[s] != 0) != (value != 0)) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const Coord c = m.coord(cur);
      for (int dz = -r; dz <= r; ++dz) {
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const Coord n{c[0] + dx, c[1] + dy, c[2] + dz};
            if (n == c || !m.contains(n) || !adjacent(c, n, connectivity)) continue;
            const std::size_t ni = m.index(n);
            if (seen[ni] || (m[ni] != 0) != (value != 0)) continue;
            seen[ni] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
  }
  return count;
}

/// Same mask with a one-cell background border.
inline MaskGrid padded(const MaskGrid& m) {
  const Shape s = m.ndim() == 2 ? Shape::make2d(m.nx() + 2, m.ny() + 2) : Shape::make3d(m.nx() + 2, m.ny() + 2, m.nz() + 2);
  MaskGrid p(s);
  const int off = 1, offz = m.ndim() == 2 ? 0 : 1;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Coord c = m.coord(i);
    p.at(Coord{c[0] + off, c[1] + off, c[2] + offz}) = m[i] ? 1 : 0;
  }
  return p;
}

struct Betti {
  int b0 = 0;
  int b1 = 0;
};

/// 2D Betti numbers: 8-connected foreground, 4-connected background holes.
inline Betti brute_betti(const MaskGrid& m) {
  return {flood_count(m, 1, 8), flood_count(padded(m), 0, 4) - 1};
}

inline int count(const MaskGrid& m) {
  int n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) n += m[i] ? 1 : 0;
  return n;
}

/// Foreground cells with a face neighbour outside the foreground.
inline std::vector<Coord> brute_boundary(const MaskGrid& m) {
  std::vector<Coord> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = m.coord(i);
    bool edge = false;
    for (int a = 0; a < m.ndim() && !edge; ++a) {
      for (int s : {-1, 1}) {
        Coord n = c;
        n[a] += s;
        if (!m.contains(n) || !m.at(n)) edge = true;
      }
    }
    if (edge) out.push_back(c);
  }
  return out;
}

inline double brute_hausdorff(const MaskGrid& a, const MaskGrid& b) {
  const auto pa = brute_boundary(a), pb = brute_boundary(b);
  const auto& sp = b.spacing();
  auto directed = [&](const std::vector<Coord>& x, const std::vector<Coord>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += std::pow((p[k] - q[k]) * sp[k], 2);
        best = std::min(best, d);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

/// Dilation by the Euclidean ball, straight from the definition.
inline MaskGrid brute_dilate(const MaskGrid& m, int r) {
  MaskGrid out(m.shape(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Coord c = m.coord(i);
    for (std::size_t j = 0; j < m.size() && !out[i]; ++j) {
      if (!m[j]) continue;
      const Coord d = m.coord(j);
      const int dx = c[0] - d[0], dy = c[1] - d[1], dz = c[2] - d[2];
      if (dx * dx + dy * dy + dz * dz <= r * r) out[i] = 1;
    }
  }
  return out;
}

/// Graph of 8/26-adjacent pixels: E - V + C.
inline int pixel_cycle_rank(const MaskGrid& m) {
  int v = 0, e = 0;
  const int conn = m.ndim() == 2 ? 8 : 26;
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) cells.push_back(i);
  }
  v = static_cast<int>(cells.size());
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      if (adjacent(m.coord(cells[a]), m.coord(cells[b]), conn)) ++e;
    }
  }
  return e - v + flood_count(m, 1, conn);
}

/// Draws a one-cell-wide digital line (Bresenham) from a to b.
inline void draw_line(MaskGrid& m, Coord a, const Coord& b, std::uint8_t value = 1) {
  const int dx = std::abs(b[0] - a[0]), dy = -std::abs(b[1] - a[1]);
  const int sx = a[0] < b[0] ? 1 : -1, sy = a[1] < b[1] ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    m.at(a) = value;
    if (a[0] == b[0] && a[1] == b[1]) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a[0] += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a[1] += sy;
    }
  }
}

/// Hand-built graph node/edge helpers for hemodynamics and morphology tests.
inline vasctree::VesselGraph make_graph(const std::vector<Coord>& nodes,
                                        const std::vector<std::array<double, 4>>& edges) {
  // edges: {u, v, length_px, radius_px}
  vasctree::VesselGraph g;
  g.ndim = 2;
  g.spacing = {1.0, 1.0, 1.0};
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    vasctree::GraphNode n;
    n.id = static_cast<int>(k);
    n.pos = nodes[k];
    g.nodes.push_back(n);
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    vasctree::GraphEdge e;
    e.id = static_cast<int>(k);
    e.u = static_cast<int>(edges[k][0]);
    e.v = static_cast<int>(edges[k][1]);
    e.length_px = edges[k][2];
    e.radius_px = edges[k][3];
    e.radius_um = edges[k][3];
    e.polyline = {nodes[static_cast<std::size_t>(e.u)], nodes[static_cast<std::size_t>(e.v)]};
    e.samples = {e.radius_px};
    g.edges.push_back(e);
  }
  for (auto& n : g.nodes) {
    const int d = g.degree(n.id);
    n.kind = d >= 3 ? vasctree::NodeKind::branch : d == 2 ? vasctree::NodeKind::anchor : vasctree::NodeKind::end;
  }
  return g;
}

/// Unit-width Y junction at the grid centre: a parent arm going up and two
/// child arms on the lower diagonals. rm holds r_p on the parent arm and the
/// centre and the given child radii on the child arms.
struct YFixture {
  ScalarField p;
  ScalarField rm;
  Coord centre{};
};

inline YFixture y_fixture(double r_p, double r_c1, double r_c2, std::size_t n = 21, int arm = 6) {
  YFixture y{ScalarField(Shape::make2d(n, n)), ScalarField(Shape::make2d(n, n)), {}};
  const int c = static_cast<int>(n) / 2;
  y.centre = {c, c, 0};
  for (int k = 0; k <= arm; ++k) {
    const Coord up{c, c - k, 0}, left{c - k, c + k, 0}, right{c + k, c + k, 0};
    y.p.at(up) = y.p.at(left) = y.p.at(right) = 1.0;
    y.rm.at(up) = r_p;
    if (k > 0) {
      y.rm.at(left) = r_c1;
      y.rm.at(right) = r_c2;
    }
  }
  return y;
}

// Symmetric binary tree: edge level l has length lengths[l] and radius
// r0 * 2^(-l/alpha). Leaves sit on the line y = 10 * levels.
struct BinaryTree {
  std::vector<Coord> nodes;
  std::vector<std::array<double, 4>> edges;
};

inline BinaryTree binary_tree(int levels, double r0, double alpha, const std::vector<double>& lengths) {
  BinaryTree t;
  t.nodes.push_back({0, 0, 0});
  t.nodes.push_back({0, 10, 0});
  t.edges.push_back({0, 1, lengths[0], r0});
  std::vector<int> frontier{1};
  for (int l = 1; l <= levels; ++l) {
    std::vector<int> next;
    const double r = r0 * std::pow(2.0, -l / alpha);
    const int spread = 1 << (levels - l + 1);
    for (const int parent : frontier) {
      for (const int side : {-1, 1}) {
        const Coord pp = t.nodes[static_cast<std::size_t>(parent)];
        t.nodes.push_back({pp[0] + side * spread, pp[1] + 10, 0});
        const int id = static_cast<int>(t.nodes.size()) - 1;
        t.edges.push_back({static_cast<double>(parent), static_cast<double>(id), lengths[static_cast<std::size_t>(l)], r});
        next.push_back(id);
      }
    }
    frontier = next;
  }
  return t;
}

// Noisy 16x16 Y junction: probabilities jittered by up to 0.15, predicted
// radii by +-0.3, children at 1.1 and 0.9 of the consistent radius.
inline vasctree::LossChannel noisy_y_channel(std::uint64_t seed, double alpha = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.15), rn(-0.3, 0.3);
  const double rc = 4.0 * std::pow(2.0, -1.0 / alpha);
  const YFixture y = y_fixture(4.0, rc * 1.1, rc * 0.9, 16, 5);
  vasctree::LossChannel ch;
  ch.gt = MaskGrid(y.p.shape());
  ch.p = y.p;
  ch.rm_pred = y.rm;
  ch.rm_gt = y.rm;
  for (std::size_t i = 0; i < ch.p.size(); ++i) {
    ch.gt[i] = y.p[i] > 0.5 ? 1 : 0;
    ch.p[i] = y.p[i] > 0.5 ? 1.0 - noise(rng) : noise(rng);
    ch.rm_pred[i] = (y.rm[i] > 0.0 ? y.rm[i] : 1.0) + rn(rng);
    ch.rm_gt[i] = y.rm[i];
  }
  ch.table = vasctree::fixed_table(alpha);
  return ch;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace vt_test
