#include "vasctree/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vasctree/raster.hpp"

namespace vasctree {

void validate(const TreeParams& p) {
  if (!(p.alpha > 0.0)) throw DataError("synth: alpha must be positive");
  if (p.depth < 1) throw DataError("synth: depth must be >= 1");
  if (p.depth > 12) throw DataError("synth: depth must be <= 12");
  if (!(p.root_radius >= 2.0)) throw DataError("synth: root radius must be >= 2 px");
  if (!(p.branch_angle > 0.0 && p.branch_angle < 180.0)) throw DataError("synth: branch angle must lie in (0, 180)");
  if (!(p.length_ratio > 0.0)) throw DataError("synth: length ratio must be positive");
  if (!(p.root_length >= 0.0)) throw DataError("synth: root length must be >= 0");
  if (!(p.scale > 0.0)) throw DataError("synth: scale must be positive");
}

namespace {

using Vec2 = std::array<double, 2>;

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2, 0.0, 1.0);
  return std::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double segment_distance(const SynthSegment& s, const SynthSegment& t) {
  const double d1 = cross(s.start, s.end, t.start), d2 = cross(s.start, s.end, t.end);
  const double d3 = cross(t.start, t.end, s.start), d4 = cross(t.start, t.end, s.end);
  if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return 0.0;
  return std::min({point_segment_distance(s.start, t.start, t.end), point_segment_distance(s.end, t.start, t.end),
                   point_segment_distance(t.start, s.start, s.end), point_segment_distance(t.end, s.start, s.end)});
}

std::vector<SynthSegment> grow(const TreeParams& p) {
  Lcg rng(p.seed);
  const double shrink = std::pow(2.0, -1.0 / p.alpha);
  const double half = p.branch_angle / 2.0 * std::numbers::pi / 180.0;
  std::vector<SynthSegment> segs;
  std::vector<double> heading, length;
  const double l0 = p.root_length > 0.0 ? p.root_length : 12.0 * p.root_radius;
  segs.push_back({-1, 0, {0.0, 0.0}, {0.0, l0}, p.root_radius});
  heading.push_back(std::numbers::pi / 2.0);
  length.push_back(l0);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].level >= p.depth) continue;
    for (const double side : {-1.0, 1.0}) {
      const double h = heading[i] + side * half * (1.0 + 0.1 * rng.symmetric());
      const double len = length[i] * p.length_ratio;
      SynthSegment c;
      c.parent = static_cast<int>(i);
      c.level = segs[i].level + 1;
      c.start = segs[i].end;
      c.end = {c.start[0] + len * std::cos(h), c.start[1] + len * std::sin(h)};
      c.radius = segs[i].radius * shrink;
      segs.push_back(c);
      heading.push_back(h);
      length.push_back(len);
    }
  }
  return segs;
}

void check_collisions(const std::vector<SynthSegment>& segs) {
  for (std::size_t a = 0; a < segs.size(); ++a) {
    for (std::size_t b = a + 1; b < segs.size(); ++b) {
      const auto& s = segs[a];
      const auto& t = segs[b];
      const bool adjacent = t.parent == static_cast<int>(a) || s.parent == static_cast<int>(b) ||
                            (s.parent == t.parent && s.parent >= 0);
      if (adjacent) continue;
      if (segment_distance(s, t) <= s.radius + t.radius + 2.0) {
        throw DataError("synth: branches " + std::to_string(a) + " and " + std::to_string(b) +
                        " collide; use a larger canvas spread (wider branch angle) or a shorter length ratio");
      }
    }
  }
}

void translate(std::vector<SynthSegment>& segs, double dx, double dy) {
  for (auto& s : segs) {
    s.start = {s.start[0] + dx, s.start[1] + dy};
    s.end = {s.end[0] + dx, s.end[1] + dy};
  }
}

void rasterize(const std::vector<SynthSegment>& segs, MaskGrid& mask, std::uint8_t value) {
  for (const auto& s : segs) {
    const double reach = s.radius - 0.5;
    const auto x0 = static_cast<long>(std::floor(std::min(s.start[0], s.end[0]) - s.radius));
    const auto x1 = static_cast<long>(std::ceil(std::max(s.start[0], s.end[0]) + s.radius));
    const auto y0 = static_cast<long>(std::floor(std::min(s.start[1], s.end[1]) - s.radius));
    const auto y1 = static_cast<long>(std::ceil(std::max(s.start[1], s.end[1]) + s.radius));
    for (long y = std::max(0L, y0); y <= std::min(static_cast<long>(mask.ny()) - 1, y1); ++y) {
      for (long x = std::max(0L, x0); x <= std::min(static_cast<long>(mask.nx()) - 1, x1); ++x) {
        const Vec2 c{static_cast<double>(x), static_cast<double>(y)};
        if (point_segment_distance(c, s.start, s.end) <= reach) {
          auto& cell = mask.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
          cell = static_cast<std::uint8_t>(cell | value);
        }
      }
    }
  }
}

std::vector<Coord> bresenham(Coord a, const Coord& b) {
  std::vector<Coord> out;
  const int dx = std::abs(b[0] - a[0]), dy = -std::abs(b[1] - a[1]);
  const int sx = a[0] < b[0] ? 1 : -1, sy = a[1] < b[1] ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    out.push_back(a);
    if (a == b) break;
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
  return out;
}

Coord round_point(const Vec2& p) {
  return {static_cast<int>(std::lround(p[0])), static_cast<int>(std::lround(p[1])), 0};
}

VesselGraph build_graph(const std::vector<SynthSegment>& segs, const TreeParams& p, VesselClass cls) {
  // node k: 0 is the root start, k + 1 is the end of segment k
  std::vector<Coord> pos{round_point(segs.front().start)};
  for (const auto& s : segs) pos.push_back(round_point(s.end));
  std::vector<std::size_t> order(pos.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::make_pair(pos[a][1], pos[a][0]) < std::make_pair(pos[b][1], pos[b][0]);
  });
  std::vector<int> id(pos.size());
  VesselGraph g;
  g.ndim = 2;
  g.scale = p.scale;
  g.spacing = {p.scale, p.scale, 1.0};
  g.cls = cls;
  for (std::size_t k = 0; k < order.size(); ++k) {
    id[order[k]] = static_cast<int>(k);
    GraphNode n;
    n.id = static_cast<int>(k);
    n.pos = pos[order[k]];
    g.nodes.push_back(n);
  }
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::size_t from = segs[k].parent < 0 ? 0 : static_cast<std::size_t>(segs[k].parent) + 1;
    GraphEdge e;
    e.u = id[from];
    e.v = id[k + 1];
    e.polyline = bresenham(pos[from], pos[k + 1]);
    if (e.u > e.v) {
      std::swap(e.u, e.v);
      std::reverse(e.polyline.begin(), e.polyline.end());
    }
    for (std::size_t i = 1; i < e.polyline.size(); ++i) {
      const auto& a = e.polyline[i - 1];
      const auto& b = e.polyline[i];
      e.length_px += (a[0] != b[0] && a[1] != b[1]) ? std::numbers::sqrt2 : 1.0;
    }
    e.radius_px = segs[k].radius;
    e.radius_um = segs[k].radius * p.scale;
    e.cls = cls;
    e.samples.assign(e.polyline.size(), segs[k].radius);
    g.edges.push_back(std::move(e));
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    if (a.u != b.u) return a.u < b.u;
    if (a.v != b.v) return a.v < b.v;
    return a.polyline < b.polyline;
  });
  for (std::size_t k = 0; k < g.edges.size(); ++k) g.edges[k].id = static_cast<int>(k);
  for (auto& n : g.nodes) n.kind = g.degree(n.id) >= 3 ? NodeKind::branch : NodeKind::end;
  return g;
}

struct Box {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  void add(const std::vector<SynthSegment>& segs) {
    for (const auto& s : segs) {
      for (const auto& q : {s.start, s.end}) {
        x0 = std::min(x0, q[0] - s.radius);
        y0 = std::min(y0, q[1] - s.radius);
        x1 = std::max(x1, q[0] + s.radius);
        y1 = std::max(y1, q[1] + s.radius);
      }
    }
  }
};

constexpr double kMargin = 4.0;

// Lattice pockets enclosed by the union of capsules become foreground.
void fill_holes(MaskGrid& mask) {
  MaskGrid bg(mask.shape(), mask.spacing());
  for (std::size_t i = 0; i < mask.size(); ++i) bg[i] = mask[i] ? 0 : 1;
  const Components cc = components(bg, default_bg_connectivity(2));
  std::vector<std::uint8_t> outer(static_cast<std::size_t>(cc.count) + 1, 0);
  for (std::size_t y = 0; y < mask.ny(); ++y) {
    for (std::size_t x = 0; x < mask.nx(); ++x) {
      if (x != 0 && y != 0 && x + 1 != mask.nx() && y + 1 != mask.ny()) continue;
      outer[static_cast<std::size_t>(cc.labels.at(x, y))] = 1;
    }
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] && !outer[static_cast<std::size_t>(cc.labels[i])]) mask[i] = 1;
  }
}

SynthTree finish(std::vector<SynthSegment> segs, const TreeParams& p, VesselClass cls, const Shape& shape) {
  SynthTree t;
  t.params = p;
  t.segments = std::move(segs);
  t.graph = build_graph(t.segments, p, cls);
  t.mask = MaskGrid(shape, {p.scale, p.scale, 1.0});
  rasterize(t.segments, t.mask, 1);
  fill_holes(t.mask);
  t.rm_gt = edt(t.mask);
  return t;
}

}  // namespace

SynthTree gen_tree(const TreeParams& params) {
  validate(params);
  auto segs = grow(params);
  check_collisions(segs);
  Box box;
  box.add(segs);
  // integer shift keeps the root axis on cell centres
  const double dx = std::ceil(kMargin - box.x0), dy = std::ceil(kMargin - box.y0);
  translate(segs, dx, dy);
  const auto nx = static_cast<std::size_t>(std::ceil(box.x1 + dx + kMargin)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(box.y1 + dy + kMargin)) + 1;
  return finish(std::move(segs), params, VesselClass::single, Shape::make2d(nx, ny));
}

AvPair gen_av_pair(const TreeParams& params, double artery_radius_scale, double vein_radius_scale) {
  validate(params);
  if (!(artery_radius_scale > 0.0) || !(vein_radius_scale > 0.0)) {
    throw DataError("synth: radius scales must be positive");
  }
  auto art = grow(params);
  const double gap = std::ceil(params.root_radius * std::max(artery_radius_scale, vein_radius_scale)) + 2.0;
  translate(art, 0.0, gap);
  auto ven = art;
  for (auto& s : ven) {
    s.start[1] = -s.start[1];
    s.end[1] = -s.end[1];
    s.radius *= vein_radius_scale;
  }
  for (auto& s : art) s.radius *= artery_radius_scale;
  check_collisions(art);
  check_collisions(ven);

  Box box;
  box.add(art);
  box.add(ven);
  const double dx = std::ceil(kMargin - box.x0), dy = std::ceil(kMargin - box.y0);
  translate(art, dx, dy);
  translate(ven, dx, dy);
  const auto nx = static_cast<std::size_t>(std::ceil(box.x1 + dx + kMargin)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(box.y1 + dy + kMargin)) + 1;
  const Shape shape = Shape::make2d(nx, ny);

  AvPair pair;
  pair.artery = finish(art, params, VesselClass::artery, shape);
  pair.vein = finish(ven, params, VesselClass::vein, shape);
  pair.labels = MaskGrid(shape, {params.scale, params.scale, 1.0});
  for (std::size_t i = 0; i < pair.labels.size(); ++i) {
    pair.labels[i] = static_cast<std::uint8_t>((pair.artery.mask[i] ? 1 : 0) | (pair.vein.mask[i] ? 2 : 0));
  }
  pair.disc = {dx, dy, 0.0};

  std::vector<Vec2> leaves;
  for (const auto* tree : {&pair.artery, &pair.vein}) {
    for (const auto& s : tree->segments) {
      if (s.level == params.depth) leaves.push_back(s.end);
    }
  }
  Vec2 c{0.0, 0.0};
  for (const auto& l : leaves) {
    c[0] += l[0] / static_cast<double>(leaves.size());
    c[1] += l[1] / static_cast<double>(leaves.size());
  }
  double r = 0.0;
  for (const auto& l : leaves) r = std::max(r, std::hypot(l[0] - c[0], l[1] - c[1]));
  pair.macula_center = {c[0], c[1], 0.0};
  pair.macula_radius = r + 2.0;
  return pair;
}

}  // namespace vasctree
