#include "vasctree/skeleton.hpp"

#include <array>

#include "vasctree/raster.hpp"

namespace vasctree {
namespace {

// Position of each raster-order neighbour inside the 3x3(x3) block.
template <int N>
std::array<Coord, N> block_positions() {
  std::array<Coord, N> pos{};
  int k = 0;
  const int zr = N == 26 ? 1 : 0;
  for (int dz = -zr; dz <= zr; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        pos[static_cast<std::size_t>(k++)] = {dx, dy, dz};
      }
  return pos;
}

int chebyshev(const Coord& a, const Coord& b) {
  int m = 0;
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
int manhattan(const Coord& a, const Coord& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}
int manhattan0(const Coord& a) { return std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]); }

// Counts components of the cells selected by `member` under `adjacent`,
// only counting those that contain a cell flagged by `anchor`.
template <int N, class Member, class Adjacent, class Anchor>
int count_components(const std::array<Coord, N>& pos, Member member, Adjacent adjacent,
                     Anchor anchor) {
  std::array<int, N> comp{};
  comp.fill(-1);
  int count = 0;
  for (int s = 0; s < N; ++s) {
    if (!member(s) || comp[static_cast<std::size_t>(s)] >= 0) continue;
    bool anchored = false;
    std::array<int, N> stack{};
    int top = 0;
    stack[static_cast<std::size_t>(top++)] = s;
    comp[static_cast<std::size_t>(s)] = s;
    while (top > 0) {
      const int c = stack[static_cast<std::size_t>(--top)];
      anchored = anchored || anchor(c);
      for (int t = 0; t < N; ++t) {
        if (comp[static_cast<std::size_t>(t)] >= 0 || !member(t)) continue;
        if (!adjacent(pos[static_cast<std::size_t>(c)], pos[static_cast<std::size_t>(t)])) continue;
        comp[static_cast<std::size_t>(t)] = s;
        stack[static_cast<std::size_t>(top++)] = t;
      }
    }
    if (anchored) ++count;
  }
  return count;
}

bool compute_simple_2d(unsigned bits) {
  static const auto pos = block_positions<8>();
  auto fg = [&](int s) { return ((bits >> s) & 1u) != 0; };
  const int t8 = count_components<8>(
      pos, fg, [](const Coord& a, const Coord& b) { return chebyshev(a, b) == 1; },
      [](int) { return true; });
  if (t8 != 1) return false;
  const int t4 = count_components<8>(
      pos, [&](int s) { return !fg(s); },
      [](const Coord& a, const Coord& b) { return manhattan(a, b) == 1; },
      [&](int s) { return manhattan0(pos[static_cast<std::size_t>(s)]) == 1; });
  return t4 == 1;
}

const std::array<bool, 256>& simple_lut_2d() {
  static const std::array<bool, 256> lut = [] {
    std::array<bool, 256> t{};
    for (unsigned b = 0; b < 256; ++b) t[b] = compute_simple_2d(b);
    return t;
  }();
  return lut;
}

}  // namespace

bool is_simple_2d(const std::uint8_t (&n)[8]) {
  unsigned bits = 0;
  for (int i = 0; i < 8; ++i) bits |= (n[i] ? 1u : 0u) << i;
  return simple_lut_2d()[bits];
}

bool is_simple_3d(const std::uint8_t (&n)[26]) {
  static const auto pos = block_positions<26>();
  auto fg = [&](int s) { return n[s] != 0; };
  const int t26 = count_components<26>(
      pos, fg, [](const Coord& a, const Coord& b) { return chebyshev(a, b) == 1; },
      [](int) { return true; });
  if (t26 != 1) return false;
  // background restricted to the 18-neighbourhood, 6-adjacency
  const int t6 = count_components<26>(
      pos, [&](int s) { return !fg(s) && manhattan0(pos[static_cast<std::size_t>(s)]) <= 2; },
      [](const Coord& a, const Coord& b) { return manhattan(a, b) == 1; },
      [&](int s) { return manhattan0(pos[static_cast<std::size_t>(s)]) == 1; });
  return t6 == 1;
}

namespace {

struct Padded {
  std::vector<std::uint8_t> cells;
  std::array<std::size_t, 3> ext{};
  std::vector<std::ptrdiff_t> offsets;  // raster-order neighbour offsets
  std::vector<std::size_t> fg;          // padded indices of foreground cells, raster order
};

Padded pad(const MaskGrid& mask) {
  Padded p;
  const bool is3d = mask.ndim() == 3;
  p.ext = {mask.nx() + 2, mask.ny() + 2, is3d ? mask.nz() + 2 : 1};
  p.cells.assign(p.ext[0] * p.ext[1] * p.ext[2], 0);
  const std::size_t zoff = is3d ? 1 : 0;
  for (std::size_t z = 0; z < mask.nz(); ++z)
    for (std::size_t y = 0; y < mask.ny(); ++y)
      for (std::size_t x = 0; x < mask.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        const std::size_t i = ((z + zoff) * p.ext[1] + (y + 1)) * p.ext[0] + (x + 1);
        p.cells[i] = 1;
        p.fg.push_back(i);
      }
  const auto sx = static_cast<std::ptrdiff_t>(p.ext[0]);
  const auto sy = static_cast<std::ptrdiff_t>(p.ext[0] * p.ext[1]);
  for (const auto& o : neighbor_offsets(mask.ndim(), default_fg_connectivity(mask.ndim()))) {
    p.offsets.push_back(o[0] + o[1] * sx + o[2] * sy);
  }
  return p;
}

MaskGrid unpad(const Padded& p, const MaskGrid& like) {
  MaskGrid out(like.shape(), like.spacing());
  const std::size_t zoff = like.ndim() == 3 ? 1 : 0;
  for (std::size_t z = 0; z < like.nz(); ++z)
    for (std::size_t y = 0; y < like.ny(); ++y)
      for (std::size_t x = 0; x < like.nx(); ++x) {
        const std::size_t i = ((z + zoff) * p.ext[1] + (y + 1)) * p.ext[0] + (x + 1);
        out.at(x, y, z) = p.cells[i];
      }
  return out;
}

void compact(Padded& p) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < p.fg.size(); ++r) {
    if (p.cells[p.fg[r]]) p.fg[w++] = p.fg[r];
  }
  p.fg.resize(w);
}

template <int N>
int gather(const Padded& p, std::size_t i, std::uint8_t (&nb)[N]) {
  int b = 0;
  for (int k = 0; k < N; ++k) {
    nb[k] = p.cells[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + p.offsets[static_cast<std::size_t>(k)])];
    b += nb[k];
  }
  return b;
}

template <int N>
bool removable(const Padded& p, std::size_t i) {
  std::uint8_t nb[N];
  const int b = gather<N>(p, i, nb);
  if (b < 2) return false;
  if constexpr (N == 8) return is_simple_2d(nb);
  else return is_simple_3d(nb);
}

// True when the cell has face neighbours along two different axes, as at a
// staircase corner or inside a 2x2 block.
bool has_corner(const Padded& p, std::size_t i, int ndim) {
  const std::ptrdiff_t step[3] = {1, static_cast<std::ptrdiff_t>(p.ext[0]),
                                  static_cast<std::ptrdiff_t>(p.ext[0] * p.ext[1])};
  int axes = 0;
  for (int a = 0; a < ndim; ++a) {
    const auto c = static_cast<std::ptrdiff_t>(i);
    if (p.cells[static_cast<std::size_t>(c - step[a])] || p.cells[static_cast<std::size_t>(c + step[a])]) ++axes;
  }
  return axes >= 2;
}

// Removes simple non-end corner cells in raster order until none is left.
template <int N>
void sweep_redundant(Padded& p, int ndim) {
  bool removed = true;
  while (removed) {
    removed = false;
    for (const std::size_t i : p.fg) {
      if (p.cells[i] && has_corner(p, i, ndim) && removable<N>(p, i)) {
        p.cells[i] = 0;
        removed = true;
      }
    }
    compact(p);
  }
}

// Directional passes: border cells facing each direction in turn are marked,
// then removed in raster order while still simple and not end points.
template <int N>
void directional_thin(Padded& p, int ndim) {
  const auto sx = static_cast<std::ptrdiff_t>(p.ext[0]);
  const auto sy = static_cast<std::ptrdiff_t>(p.ext[0] * p.ext[1]);
  std::vector<std::ptrdiff_t> dirs = {-sx, sx, -1, 1};
  if (ndim == 3) dirs = {-sy, sy, -sx, sx, -1, 1};
  std::vector<std::size_t> cand;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto d : dirs) {
      cand.clear();
      for (const std::size_t i : p.fg) {
        if (p.cells[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + d)]) continue;
        if (removable<N>(p, i)) cand.push_back(i);
      }
      for (const std::size_t i : cand) {
        if (removable<N>(p, i)) {
          p.cells[i] = 0;
          changed = true;
        }
      }
      compact(p);
    }
  }
  sweep_redundant<N>(p, ndim);
}

}  // namespace

MaskGrid thin(const MaskGrid& mask) {
  Padded p = pad(mask);
  if (mask.ndim() == 3) directional_thin<26>(p, 3);
  else directional_thin<8>(p, 2);
  return unpad(p, mask);
}

int skeleton_degree(const MaskGrid& skel, std::size_t index) {
  const Coord c = skel.coord(index);
  int d = 0;
  for (const auto& o : neighbor_offsets(skel.ndim(), default_fg_connectivity(skel.ndim()))) {
    const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
    if (skel.contains(n) && skel.at(n)) ++d;
  }
  return d;
}

SkeletonNodes classify_nodes(const MaskGrid& skel) {
  SkeletonNodes nodes;
  for (std::size_t i = 0; i < skel.size(); ++i) {
    if (!skel[i]) continue;
    const int d = skeleton_degree(skel, i);
    if (d == 1) nodes.endpoints.push_back(i);
    else if (d >= 3) nodes.branch_points.push_back(i);
  }
  return nodes;
}

}  // namespace vasctree
