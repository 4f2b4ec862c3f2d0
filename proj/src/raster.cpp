#include "vasctree/raster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>

#include "vasctree/parallel.hpp"

namespace vasctree {

const char* to_string(VesselClass c) {
  switch (c) {
    case VesselClass::artery: return "artery";
    case VesselClass::vein: return "vein";
    case VesselClass::single: return "single";
  }
  return "single";
}

VesselClass vessel_class_from_string(const std::string& s) {
  if (s == "artery") return VesselClass::artery;
  if (s == "vein") return VesselClass::vein;
  if (s == "single") return VesselClass::single;
  throw DataError("unknown vessel class '" + s + "' (expected artery, vein or single)");
}

MaskGrid class_mask(const MaskGrid& labels, VesselClass cls) {
  MaskGrid out(labels.shape(), labels.spacing());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    bool on = false;
    switch (cls) {
      case VesselClass::single: on = l != 0; break;
      case VesselClass::artery:
        on = l == static_cast<std::uint8_t>(Label::artery) || l == static_cast<std::uint8_t>(Label::both);
        break;
      case VesselClass::vein:
        on = l == static_cast<std::uint8_t>(Label::vein) || l == static_cast<std::uint8_t>(Label::both);
        break;
    }
    out[i] = on ? 1 : 0;
  }
  return out;
}

void validate_labels(const MaskGrid& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > static_cast<std::uint8_t>(Label::both)) {
      throw DataError("label " + std::to_string(labels[i]) + " outside the {bg, artery, vein, both} alphabet");
    }
  }
}

std::size_t count_foreground(const MaskGrid& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One lower-envelope pass over a line: out[q] = min_p (w (q - p))^2 + f[p].
// `v` and `z` are caller-owned scratch buffers of size n and n + 1.
void envelope_1d(const double* f, double* out, std::size_t n, double w, std::vector<std::size_t>& v,
                 std::vector<double>& z) {
  std::size_t k = 0;
  bool any = false;
  const double w2 = w * w;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      any = true;
      continue;
    }
    const double fq = f[q] + w2 * static_cast<double>(q) * static_cast<double>(q);
    auto intersect = [&](std::size_t p) {
      const double fp = f[p] + w2 * static_cast<double>(p) * static_cast<double>(p);
      return (fq - fp) / (2.0 * w2 * (static_cast<double>(q) - static_cast<double>(p)));
    };
    double s = intersect(v[k]);
    // z[0] is -inf, so this stops at k == 0
    while (s <= z[k]) s = intersect(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (!any) {
    std::fill(out, out + n, kInf);
    return;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double d = w * (static_cast<double>(q) - static_cast<double>(v[k]));
    out[q] = d * d + f[v[k]];
  }
}

void envelope_pass(std::vector<double>& data, const Shape& shape, int axis, double w) {
  const std::size_t n = shape.ext[axis];
  if (n == 0) return;
  std::size_t stride = 1;
  for (int a = 0; a < axis; ++a) stride *= shape.ext[a];
  const std::size_t lines = shape.size() / n;
  parallel_for(lines, [&](std::size_t begin, std::size_t end) {
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<std::size_t> v(n);
    for (std::size_t l = begin; l < end; ++l) {
      // line l -> base offset: split l into (below-axis part, above-axis part)
      const std::size_t lo = l % stride;
      const std::size_t hi = l / stride;
      const std::size_t base = hi * stride * n + lo;
      for (std::size_t q = 0; q < n; ++q) f[q] = data[base + q * stride];
      envelope_1d(f.data(), out.data(), n, w, v, z);
      for (std::size_t q = 0; q < n; ++q) data[base + q * stride] = out[q];
    }
  });
}

}  // namespace

std::array<double, 3> axis_weights(const Spacing& spacing, int ndim, EdtUnits units) {
  std::array<double, 3> w{1.0, 1.0, 1.0};
  if (units == EdtUnits::physical) {
    for (int a = 0; a < ndim; ++a) w[a] = spacing[a];
  } else {
    double smallest = spacing[0];
    for (int a = 1; a < ndim; ++a) smallest = std::min(smallest, spacing[a]);
    for (int a = 0; a < ndim; ++a) w[a] = spacing[a] / smallest;
  }
  return w;
}

ScalarField squared_distance_to(const MaskGrid& sites, const std::array<double, 3>& weights) {
  ScalarField out(sites.shape(), sites.spacing());
  std::vector<double> data(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) data[i] = sites[i] ? 0.0 : kInf;
  for (int a = 0; a < sites.ndim(); ++a) envelope_pass(data, sites.shape(), a, weights[a]);
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i];
  return out;
}

ScalarField edt(const MaskGrid& labels, VesselClass cls, EdtUnits units) {
  if (labels.empty()) throw DataError("edt: empty grid");
  const MaskGrid fg = class_mask(labels, cls);
  MaskGrid bg(fg.shape(), fg.spacing());
  bool any_bg = false;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    bg[i] = fg[i] ? 0 : 1;
    any_bg = any_bg || bg[i];
  }
  if (!any_bg) throw DataError("edt: grid has no background cell to measure distance to");
  ScalarField d = squared_distance_to(bg, axis_weights(labels.spacing(), labels.ndim(), units));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::sqrt(d[i]);
  return d;
}

MaskGrid morph(const MaskGrid& mask, MorphOp op, int radius) {
  if (radius < 1) throw DataError("morph: radius must be >= 1");
  const double r2 = static_cast<double>(radius) * radius;
  const std::array<double, 3> unit{1.0, 1.0, 1.0};
  auto dilate = [&](const MaskGrid& m) {
    const ScalarField d = squared_distance_to(m, unit);
    MaskGrid out(m.shape(), m.spacing());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = d[i] <= r2 ? 1 : 0;
    return out;
  };
  auto erode = [&](const MaskGrid& m) {
    MaskGrid comp(m.shape(), m.spacing());
    for (std::size_t i = 0; i < m.size(); ++i) comp[i] = m[i] ? 0 : 1;
    const ScalarField d = squared_distance_to(comp, unit);
    MaskGrid out(m.shape(), m.spacing());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] && d[i] > r2) ? 1 : 0;
    return out;
  };
  MaskGrid bin(mask.shape(), mask.spacing());
  for (std::size_t i = 0; i < mask.size(); ++i) bin[i] = mask[i] ? 1 : 0;
  switch (op) {
    case MorphOp::dilate: return dilate(bin);
    case MorphOp::erode: return erode(bin);
    case MorphOp::open: return dilate(erode(bin));
    case MorphOp::close: return erode(dilate(bin));
  }
  return bin;
}

const std::vector<Coord>& neighbor_offsets(int ndim, int connectivity) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<Coord>> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(ndim, connectivity);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const bool ok = (ndim == 2 && (connectivity == 4 || connectivity == 8)) ||
                  (ndim == 3 && (connectivity == 6 || connectivity == 18 || connectivity == 26));
  if (!ok) {
    throw DataError("unsupported connectivity " + std::to_string(connectivity) + " for " +
                    std::to_string(ndim) + "D grid");
  }
  std::vector<Coord> offs;
  const int zr = ndim == 3 ? 1 : 0;
  for (int dz = -zr; dz <= zr; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nonzero = (dx != 0) + (dy != 0) + (dz != 0);
        if (nonzero == 0) continue;
        bool keep = false;
        if (connectivity == 4 || connectivity == 6) keep = nonzero == 1;
        else if (connectivity == 18) keep = nonzero <= 2;
        else keep = true;
        if (keep) offs.push_back({dx, dy, dz});
      }
    }
  }
  return cache.emplace(key, std::move(offs)).first->second;
}

int default_fg_connectivity(int ndim) { return ndim == 3 ? 26 : 8; }
int default_bg_connectivity(int ndim) { return ndim == 3 ? 6 : 4; }

Components components(const MaskGrid& mask, int connectivity) {
  const auto& offs = neighbor_offsets(mask.ndim(), connectivity);
  Components out{LabelField(mask.shape(), mask.spacing(), 0), 0};
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || out.labels[i] != 0) continue;
    const int id = ++out.count;
    out.labels[i] = id;
    queue.push_back(i);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const Coord c = mask.coord(cur);
      for (const auto& o : offs) {
        const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
        if (!mask.contains(n)) continue;
        const std::size_t ni = mask.index(n);
        if (mask[ni] && out.labels[ni] == 0) {
          out.labels[ni] = id;
          queue.push_back(ni);
        }
      }
    }
  }
  return out;
}

MaskGrid remove_small_regions(const MaskGrid& mask, std::size_t min_cells, int connectivity) {
  const Components cc = components(mask, connectivity);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(cc.count) + 1, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) ++sizes[static_cast<std::size_t>(cc.labels[i])];
  MaskGrid out(mask.shape(), mask.spacing());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto l = static_cast<std::size_t>(cc.labels[i]);
    out[i] = (l != 0 && sizes[l] >= min_cells) ? 1 : 0;
  }
  return out;
}

}  // namespace vasctree
