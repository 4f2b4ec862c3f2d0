#include <algorithm>
#include <cmath>
#include <limits>

#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"

namespace vasctree {
namespace {

constexpr double kTieGap = 1e-6;

// Cross window (face neighbours plus centre) in raster order.
std::vector<Coord> cross_window(int ndim) {
  if (ndim == 3) {
    return {{0, 0, -1}, {0, -1, 0}, {-1, 0, 0}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  }
  return {{0, -1, 0}, {-1, 0, 0}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
}

struct PoolResult {
  std::vector<double> value;
  std::vector<std::int64_t> arg;  // -1 for the zero pad
};

// Min pool (erode == true, out-of-grid cells read as 0) or max pool over
// in-grid cells. `source` maps each input cell to the input cell of p it was
// copied from (-1 for pad), so near-ties between copies of the same value are
// not reported.
PoolResult pool(const Shape& shape, const std::vector<double>& in, bool erode,
                const std::vector<std::int64_t>& source, std::vector<std::uint8_t>& near_tie) {
  const Grid<std::uint8_t> geom(shape);
  const auto window = cross_window(shape.ndim);
  PoolResult r{std::vector<double>(in.size()), std::vector<std::int64_t>(in.size())};
  struct Cand {
    double v;
    std::int64_t idx;
    std::int64_t src;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Coord c = geom.coord(i);
    cands.clear();
    for (const auto& o : window) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (geom.contains(n)) {
        const auto ni = static_cast<std::int64_t>(geom.index(n));
        cands.push_back({in[static_cast<std::size_t>(ni)], ni, source[static_cast<std::size_t>(ni)]});
      } else if (erode) {
        cands.push_back({0.0, -1, -1});
      }
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < cands.size(); ++k) {
      if (erode ? cands[k].v < cands[best].v : cands[k].v > cands[best].v) best = k;
    }
    r.value[i] = cands[best].v;
    r.arg[i] = cands[best].idx;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      if (k == best || cands[k].src == cands[best].src) continue;
      if (std::abs(cands[k].v - cands[best].v) < kTieGap) {
        if (cands[best].src >= 0) near_tie[static_cast<std::size_t>(cands[best].src)] = 1;
        if (cands[k].src >= 0) near_tie[static_cast<std::size_t>(cands[k].src)] = 1;
      }
    }
  }
  return r;
}

ScalarField run(const ScalarField& p, int iterations, SoftSkeletonTape* tape) {
  if (iterations < 1) throw DataError("soft_skeleton: iteration count must be >= 1");
  const std::size_t n = p.size();
  std::vector<double> level(p.values().begin(), p.values().end());
  std::vector<double> acc(n, 0.0);
  std::vector<std::int64_t> source(n);
  for (std::size_t i = 0; i < n; ++i) source[i] = static_cast<std::int64_t>(i);
  std::vector<std::uint8_t> near_tie(n, 0);

  if (tape) {
    *tape = SoftSkeletonTape{};
    tape->shape = p.shape();
    tape->iterations = iterations;
  }
  for (int t = 0; t < iterations; ++t) {
    PoolResult er = pool(p.shape(), level, true, source, near_tie);
    std::vector<std::int64_t> er_source(n);
    for (std::size_t i = 0; i < n; ++i) {
      er_source[i] = er.arg[i] < 0 ? -1 : source[static_cast<std::size_t>(er.arg[i])];
    }
    PoolResult di = pool(p.shape(), er.value, false, er_source, near_tie);
    std::vector<double> residual(n), delta(n), next_acc(n);
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = level[i] - di.value[i];
      delta[i] = std::max(0.0, residual[i]);
      next_acc[i] = acc[i] + std::max(0.0, delta[i] - acc[i] * delta[i]);
    }
    if (tape) {
      tape->level.push_back(level);
      tape->accum.push_back(acc);
      tape->residual.push_back(std::move(residual));
      tape->delta.push_back(std::move(delta));
      tape->erode_arg.push_back(er.arg);
      tape->dilate_arg.push_back(std::move(di.arg));
    }
    acc = std::move(next_acc);
    level = std::move(er.value);
    source = std::move(er_source);
  }

  std::int64_t arg = -1;
  double mx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (acc[i] > mx) {
      mx = acc[i];
      arg = static_cast<std::int64_t>(i);
    }
  }
  bool max_tie = false;
  if (arg >= 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::int64_t>(i) != arg && mx - acc[i] < kTieGap && acc[i] != mx) max_tie = true;
    }
  }
  ScalarField sk(p.shape(), p.spacing(), 0.0);
  if (arg >= 0) {
    for (std::size_t i = 0; i < n; ++i) sk[i] = acc[i] / mx;
  }
  if (tape) {
    tape->raw = std::move(acc);
    tape->max_index = arg;
    tape->max_value = mx;
    tape->near_tie = std::move(near_tie);
    tape->max_near_tie = max_tie;
  }
  return sk;
}

}  // namespace

int default_soft_iterations(const ScalarField& p) {
  // pad by one background cell so the grid border acts as background
  Shape padded = p.shape();
  for (int a = 0; a < p.ndim(); ++a) padded.ext[static_cast<std::size_t>(a)] += 2;
  MaskGrid bg(padded, p.spacing(), 1);
  const int zoff = p.ndim() == 3 ? 1 : 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Coord c = p.coord(i);
    bg.at(static_cast<std::size_t>(c[0] + 1), static_cast<std::size_t>(c[1] + 1),
          static_cast<std::size_t>(c[2] + zoff)) = p[i] >= 0.5 ? 0 : 1;
  }
  const ScalarField d2 = squared_distance_to(bg, {1.0, 1.0, 1.0});
  double mx = 0.0;
  for (std::size_t i = 0; i < d2.size(); ++i) mx = std::max(mx, d2[i]);
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(mx) - 1e-12)));
}

ScalarField soft_skeleton(const ScalarField& p, int iterations) { return run(p, iterations, nullptr); }

ScalarField soft_skeleton(const ScalarField& p, int iterations, SoftSkeletonTape& tape) {
  return run(p, iterations, &tape);
}

ScalarField soft_skeleton_backward(const SoftSkeletonTape& tape, const ScalarField& grad_sk) {
  const std::size_t n = grad_sk.size();
  if (tape.shape.size() != n) throw DataError("soft_skeleton_backward: gradient shape mismatch");
  ScalarField out(tape.shape, grad_sk.spacing(), 0.0);
  if (tape.max_index < 0) return out;

  // sk = raw / raw[m]
  std::vector<double> g_acc(n);
  const double m = tape.max_value;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_acc[i] = grad_sk[i] / m;
    dot += grad_sk[i] * tape.raw[i];
  }
  g_acc[static_cast<std::size_t>(tape.max_index)] -= dot / (m * m);

  std::vector<double> g_level_next(n, 0.0);  // gradient w.r.t. level_{t+1}
  for (int t = tape.iterations - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto& acc = tape.accum[ts];
    const auto& delta = tape.delta[ts];
    const auto& residual = tape.residual[ts];
    std::vector<double> g_level(n, 0.0), g_open(n, 0.0), g_eroded(g_level_next);
    std::vector<double> g_acc_prev(n);
    for (std::size_t i = 0; i < n; ++i) {
      // acc' = acc + relu(a), a = delta - acc * delta
      const double a = delta[i] - acc[i] * delta[i];
      const double g_a = a > 0.0 ? g_acc[i] : 0.0;
      g_acc_prev[i] = g_acc[i] - g_a * delta[i];
      const double g_delta = g_a * (1.0 - acc[i]);
      const double g_res = residual[i] > 0.0 ? g_delta : 0.0;
      g_level[i] += g_res;
      g_open[i] = -g_res;
    }
    const auto& darg = tape.dilate_arg[ts];
    for (std::size_t i = 0; i < n; ++i) {
      if (g_open[i] != 0.0) g_eroded[static_cast<std::size_t>(darg[i])] += g_open[i];
    }
    const auto& earg = tape.erode_arg[ts];
    for (std::size_t i = 0; i < n; ++i) {
      if (g_eroded[i] != 0.0 && earg[i] >= 0) g_level[static_cast<std::size_t>(earg[i])] += g_eroded[i];
    }
    g_acc = std::move(g_acc_prev);
    g_level_next = std::move(g_level);
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = g_level_next[i];
  return out;
}

namespace {

std::vector<Coord> box_window(int ndim, int kernel_size) {
  if (kernel_size < 3 || kernel_size % 2 == 0) {
    throw DataError("junction_map: kernel size must be odd and >= 3");
  }
  const int r = kernel_size / 2;
  const int zr = ndim == 3 ? r : 0;
  std::vector<Coord> w;
  for (int dz = -zr; dz <= zr; ++dz)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) w.push_back({dx, dy, dz});
  return w;
}

std::vector<double> box_sum(const ScalarField& f, const std::vector<Coord>& window) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Coord c = f.coord(i);
    double s = 0.0;
    for (const auto& o : window) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (f.contains(n)) s += f.at(n);
    }
    out[i] = s;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

ScalarField junction_map(const ScalarField& sk, const JunctionParams& params) {
  const auto window = box_window(sk.ndim(), params.kernel_size);
  const auto sums = box_sum(sk, window);
  ScalarField j(sk.shape(), sk.spacing(), 0.0);
  for (std::size_t i = 0; i < sk.size(); ++i) {
    j[i] = sigmoid(params.sharpness * (sums[i] - params.offset)) * sk[i];
  }
  return j;
}

ScalarField junction_map_backward(const ScalarField& sk, const JunctionParams& params,
                                  const ScalarField& grad_j) {
  require_same_shape(sk, grad_j, "junction_map_backward");
  const auto window = box_window(sk.ndim(), params.kernel_size);
  const auto sums = box_sum(sk, window);
  ScalarField g(sk.shape(), sk.spacing(), 0.0);
  for (std::size_t i = 0; i < sk.size(); ++i) {
    if (grad_j[i] == 0.0) continue;
    const double s = sigmoid(params.sharpness * (sums[i] - params.offset));
    g[i] += grad_j[i] * s;
    const double g_sum = grad_j[i] * sk[i] * params.sharpness * s * (1.0 - s);
    if (g_sum == 0.0) continue;
    const Coord c = sk.coord(i);
    for (const auto& o : window) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (sk.contains(n)) g.at(n) += g_sum;
    }
  }
  return g;
}

}  // namespace vasctree
