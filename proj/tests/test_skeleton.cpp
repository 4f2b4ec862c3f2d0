#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vasctree/parallel.hpp"
#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"
#include "vasctree/synth.hpp"

using namespace vasctree;
using namespace vt_test;

namespace {

MaskGrid y_junction(std::size_t n = 21, int arm = 6) {
  MaskGrid m(Shape::make2d(n, n));
  const int c = static_cast<int>(n) / 2;
  for (int k = 0; k <= arm; ++k) {
    m.at(Coord{c, c - k, 0}) = 1;
    m.at(Coord{c - k, c + k, 0}) = 1;
    m.at(Coord{c + k, c + k, 0}) = 1;
  }
  return m;
}

bool has_block(const MaskGrid& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Coord c = m.coord(i);
    const int dz = m.ndim() == 3 ? 1 : 0;
    bool full = true;
    for (int z = 0; z <= dz && full; ++z) {
      for (int y = 0; y <= 1 && full; ++y) {
        for (int x = 0; x <= 1 && full; ++x) {
          const Coord n{c[0] + x, c[1] + y, c[2] + z};
          full = m.contains(n) && m.at(n);
        }
      }
    }
    if (full) return true;
  }
  return false;
}

// A cell inside a 2x2 block whose deletion keeps both the 8-connected
// foreground and the 4-connected background topology.
bool has_removable_corner(const MaskGrid& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = m.coord(i);
    bool in_block = false;
    for (int oy = -1; oy <= 0; ++oy) {
      for (int ox = -1; ox <= 0; ++ox) {
        bool full = true;
        for (int y = 0; y <= 1; ++y) {
          for (int x = 0; x <= 1; ++x) {
            const Coord n{c[0] + ox + x, c[1] + oy + y, 0};
            full = full && m.contains(n) && m.at(n);
          }
        }
        in_block = in_block || full;
      }
    }
    if (!in_block) continue;
    MaskGrid r = m;
    r[i] = 0;
    const Betti a = brute_betti(m), b = brute_betti(r);
    if (a.b0 == b.b0 && a.b1 == b.b1 && flood_count(r, 1, 8) == flood_count(m, 1, 8)) return true;
  }
  return false;
}

// Reference soft skeleton: plain loops over a cross window, zero outside.
std::vector<double> pool(const ScalarField& shape_of, const std::vector<double>& v, bool take_max) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Coord c = shape_of.coord(i);
    double best = v[i];
    for (int a = 0; a < shape_of.ndim(); ++a) {
      for (int s : {-1, 1}) {
        Coord n = c;
        n[a] += s;
        const double x = shape_of.contains(n) ? v[shape_of.index(n)] : (take_max ? 0.0 : 0.0);
        best = take_max ? std::max(best, x) : std::min(best, x);
      }
    }
    out[i] = best;
  }
  return out;
}

ScalarField oracle_soft_skeleton(const ScalarField& p, int iterations) {
  std::vector<double> level(p.values().begin(), p.values().end());
  std::vector<double> acc(level.size(), 0.0);
  for (int t = 0; t < iterations; ++t) {
    const auto eroded = pool(p, level, false);
    const auto opened = pool(p, eroded, true);
    for (std::size_t i = 0; i < level.size(); ++i) {
      const double d = std::max(0.0, level[i] - opened[i]);
      acc[i] = acc[i] + std::max(0.0, d - acc[i] * d);
    }
    level = eroded;
  }
  ScalarField out(p.shape(), p.spacing(), 0.0);
  const double mx = *std::max_element(acc.begin(), acc.end());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = mx > 0.0 ? acc[i] / mx : 0.0;
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ScalarField oracle_junction(const ScalarField& sk, int k, double sharp, double off) {
  ScalarField out(sk.shape(), sk.spacing(), 0.0);
  const int h = k / 2;
  for (std::size_t i = 0; i < sk.size(); ++i) {
    const Coord c = sk.coord(i);
    double s = 0.0;
    const int hz = sk.ndim() == 3 ? h : 0;
    for (int z = -hz; z <= hz; ++z) {
      for (int y = -h; y <= h; ++y) {
        for (int x = -h; x <= h; ++x) {
          const Coord n{c[0] + x, c[1] + y, c[2] + z};
          if (sk.contains(n)) s += sk.at(n);
        }
      }
    }
    out[i] = sigmoid(sharp * (s - off)) * sk[i];
  }
  return out;
}

ScalarField random_field(std::mt19937_64& rng, Shape s) {
  ScalarField f(s);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

double hausdorff_points(const MaskGrid& a, const MaskGrid& b) {
  auto directed = [](const MaskGrid& x, const MaskGrid& y) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!x[i]) continue;
      const Coord p = x.coord(i);
      double best = 1e300;
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (!y[j]) continue;
        const Coord q = y.coord(j);
        best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("thinning leaves a unit-width line unchanged") {
  MaskGrid m(Shape::make2d(9, 3));
  for (std::size_t x = 2; x < 7; ++x) m.at(x, 1) = 1;
  CHECK(thin(m) == m);
  const auto nodes = classify_nodes(m);
  CHECK(nodes.endpoints.size() == 2);
  CHECK(nodes.branch_points.empty());
}

TEST_CASE("thinning a filled disk leaves one connected thin set") {
  MaskGrid m(Shape::make2d(13, 13));
  for (int y = 0; y < 13; ++y) {
    for (int x = 0; x < 13; ++x) {
      if ((x - 6) * (x - 6) + (y - 6) * (y - 6) <= 16) m.at(Coord{x, y, 0}) = 1;
    }
  }
  const auto s = thin(m);
  CHECK(count(s) >= 1);
  CHECK(flood_count(s, 1, 8) == 1);
  CHECK_FALSE(has_block(s));
}

TEST_CASE("thinning an annulus leaves a single cycle") {
  MaskGrid m(Shape::make2d(25, 25));
  for (int y = 0; y < 25; ++y) {
    for (int x = 0; x < 25; ++x) {
      const int d2 = (x - 12) * (x - 12) + (y - 12) * (y - 12);
      if (d2 <= 100 && d2 >= 36) m.at(Coord{x, y, 0}) = 1;
    }
  }
  const auto s = thin(m);
  CHECK(pixel_cycle_rank(s) == 1);
  CHECK(brute_betti(s).b1 == 1);
  CHECK(flood_count(s, 1, 8) == 1);
}

TEST_CASE("thinning preserves components and holes on random masks") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 150; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(2, 64);
    const MaskGrid m = random_mask(rng, dim(rng), dim(rng));
    const MaskGrid s = thin(m);
    const Betti bm = brute_betti(m), bs = brute_betti(s);
    REQUIRE(bs.b0 == bm.b0);
    REQUIRE(bs.b1 == bm.b1);
    REQUIRE_FALSE(has_removable_corner(s));
    for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(s[i] <= m[i]);
  }
}

TEST_CASE("thinning solid shapes leaves no 2x2 block") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 150; ++trial) {
    const MaskGrid m = random_shapes(rng, 64, 64, 1 + trial % 8);
    REQUIRE_FALSE(has_block(thin(m)));
  }
}

TEST_CASE("thinning is deterministic across worker counts") {
  std::mt19937_64 rng(29);
  const MaskGrid m = random_shapes(rng, 120, 90, 30);
  set_thread_count(1);
  const auto a = thin(m);
  set_thread_count(4);
  const auto b = thin(m);
  set_thread_count(0);
  CHECK(a == b);
}

TEST_CASE("3D thinning preserves components and removes solid cubes") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const MaskGrid m = random_mask_3d(rng, 10, trial % 2 ? 0.3 : 0.6);
    const MaskGrid s = thin(m);
    REQUIRE(flood_count(s, 1, 26) == flood_count(m, 1, 26));
    REQUIRE_FALSE(has_block(s));
    for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(s[i] <= m[i]);
  }
  MaskGrid cube(Shape::make3d(9, 9, 9));
  for (std::size_t z = 2; z < 7; ++z) {
    for (std::size_t y = 2; y < 7; ++y) {
      for (std::size_t x = 2; x < 7; ++x) cube.at(x, y, z) = 1;
    }
  }
  const auto s = thin(cube);
  CHECK(count(s) >= 1);
  CHECK(flood_count(s, 1, 26) == 1);
  CHECK_FALSE(has_block(s));
}

TEST_CASE("simple point tests") {
  const std::uint8_t isolated[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  CHECK_FALSE(is_simple_2d(isolated));
  const std::uint8_t bridge[8] = {0, 1, 0, 0, 0, 0, 1, 0};
  CHECK_FALSE(is_simple_2d(bridge));
  const std::uint8_t corner[8] = {1, 1, 0, 1, 0, 0, 0, 0};
  CHECK(is_simple_2d(corner));
  const std::uint8_t ring[8] = {1, 1, 1, 1, 1, 1, 1, 1};
  CHECK_FALSE(is_simple_2d(ring));
  std::uint8_t lone3[26] = {};
  lone3[4] = 1;
  CHECK(is_simple_3d(lone3));
}

TEST_CASE("classify_nodes on a Y junction") {
  const auto y = y_junction();
  const auto nodes = classify_nodes(y);
  CHECK(nodes.endpoints.size() == 3);
  REQUIRE(nodes.branch_points.size() == 1);
  CHECK(y.coord(nodes.branch_points[0]) == Coord{10, 10, 0});
  CHECK(skeleton_degree(y, y.index(10, 10)) == 3);
}

TEST_CASE("soft skeleton of an all-zero field is zero") {
  const auto sk = soft_skeleton(ScalarField(Shape::make2d(7, 7)), 3);
  for (double v : sk.values()) CHECK(v == 0.0);
}

TEST_CASE("soft skeleton of a hard unit line is the line") {
  ScalarField p(Shape::make2d(7, 3));
  for (std::size_t x = 0; x < 7; ++x) p.at(x, 1) = 1.0;
  const auto sk = soft_skeleton(p, 2);
  CHECK(sk == oracle_soft_skeleton(p, 2));
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(sk[i] == p[i]);
}

TEST_CASE("soft skeleton of a uniform square peaks at the centre") {
  ScalarField p(Shape::make2d(7, 7), {1.0, 1.0, 1.0}, 1.0);
  const auto sk = soft_skeleton(p, 4);
  const auto o = oracle_soft_skeleton(p, 4);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(sk[i] == doctest::Approx(o[i]).epsilon(1e-14));
  CHECK(sk.at(3, 3) == 1.0);
}

TEST_CASE("soft skeleton matches the reference loops on random fields") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 40; ++trial) {
    const Shape s = trial % 4 == 3 ? Shape::make3d(6, 5, 4) : Shape::make2d(12, 9);
    const ScalarField p = random_field(rng, s);
    const int k = 1 + trial % 5;
    const auto sk = soft_skeleton(p, k);
    const auto o = oracle_soft_skeleton(p, k);
    for (std::size_t i = 0; i < p.size(); ++i) {
      REQUIRE(sk[i] == doctest::Approx(o[i]).epsilon(1e-12));
      REQUIRE(sk[i] >= 0.0);
      REQUIRE(sk[i] <= 1.0);
    }
  }
}

TEST_CASE("default soft iterations cover the widest half-width") {
  ScalarField p(Shape::make2d(20, 9));
  for (std::size_t x = 0; x < 20; ++x) {
    for (std::size_t y = 3; y <= 5; ++y) p.at(x, y) = 0.9;
  }
  CHECK(default_soft_iterations(p) == 2);
  CHECK(default_soft_iterations(ScalarField(Shape::make2d(4, 4))) == 1);
}

TEST_CASE("thresholded soft skeleton stays within one pixel of the thinned ribbon") {
  for (int width = 1; width <= 3; ++width) {
    for (const bool diagonal : {false, true}) {
      MaskGrid m(Shape::make2d(30, 30));
      for (int t = 4; t < 26; ++t) {
        for (int w = 0; w < width; ++w) {
          if (diagonal) m.at(Coord{t, t + w, 0}) = 1;
          else m.at(Coord{t, 12 + w, 0}) = 1;
        }
      }
      ScalarField p = ScalarField::from(m);
      const auto sk = soft_skeleton(p, default_soft_iterations(p));
      MaskGrid hard(m.shape());
      for (std::size_t i = 0; i < m.size(); ++i) hard[i] = sk[i] > 0.5 ? 1 : 0;
      CAPTURE(width);
      CAPTURE(diagonal);
      CHECK(hausdorff_points(hard, thin(m)) <= 1.0);
    }
  }
}

TEST_CASE("soft skeleton adjoint matches finite differences") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  int checked = 0, passed = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const Shape s = trial % 3 == 2 ? Shape::make3d(5, 5, 4) : Shape::make2d(9, 8);
    ScalarField p = random_field(rng, s);
    const int k = 1 + trial % 4;
    ScalarField w(s);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = g(rng);
    SoftSkeletonTape tape;
    soft_skeleton(p, k, tape);
    if (tape.max_near_tie) continue;
    const auto grad = soft_skeleton_backward(tape, w);
    auto objective = [&](const ScalarField& q) {
      const auto sk = soft_skeleton(q, k);
      double v = 0.0;
      for (std::size_t i = 0; i < sk.size(); ++i) v += w[i] * sk[i];
      return v;
    };
    const double h = 1e-7;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (tape.near_tie[i]) continue;
      ScalarField a = p, b = p;
      a[i] += h;
      b[i] -= h;
      const double fd = (objective(a) - objective(b)) / (2 * h);
      ++checked;
      if (std::abs(fd - grad[i]) <= 1e-4 * std::max(1.0, std::abs(fd))) ++passed;
    }
  }
  REQUIRE(checked > 100);
  CHECK(static_cast<double>(passed) / checked >= 0.99);
}

TEST_CASE("junction map on a Y junction") {
  const auto y = ScalarField::from(y_junction());
  const auto j = junction_map(y);
  CHECK(j.at(10, 10) > 0.99);
  CHECK(j.at(10, 6) < 0.01);
  CHECK(j.at(7, 13) < 0.01);
  CHECK(j.at(0, 0) == 0.0);
  const auto o = oracle_junction(y, 3, 50.0, 3.5);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(j[i] == doctest::Approx(o[i]).epsilon(1e-12));
  const auto z = junction_map(ScalarField(Shape::make2d(5, 5)));
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("junction map matches the reference on random fields and kernels") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape s = trial % 4 == 3 ? Shape::make3d(6, 6, 5) : Shape::make2d(11, 10);
    const ScalarField sk = random_field(rng, s);
    const JunctionParams jp{3 + 2 * (trial % 2), 5.0 + trial, trial % 4 == 3 ? 12.0 : 3.5};
    const auto j = junction_map(sk, jp);
    const auto o = oracle_junction(sk, jp.kernel_size, jp.sharpness, jp.offset);
    for (std::size_t i = 0; i < sk.size(); ++i) REQUIRE(j[i] == doctest::Approx(o[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(junction_map(ScalarField(Shape::make2d(5, 5)), JunctionParams{4, 50.0, 3.5}), DataError);
}

TEST_CASE("junction map sharpness response") {
  const auto y = ScalarField::from(y_junction());
  double prev_junction = 0.0, prev_arm = 1.0;
  for (const double sharp : {2.0, 10.0, 50.0, 200.0}) {
    const auto j = junction_map(y, JunctionParams{3, sharp, 3.5});
    CHECK(j.at(10, 10) >= prev_junction);
    CHECK(j.at(10, 6) <= prev_arm);
    prev_junction = j.at(10, 10);
    prev_arm = j.at(10, 6);
  }
}

TEST_CASE("junction map adjoint matches finite differences") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const Shape s = trial % 3 == 2 ? Shape::make3d(5, 4, 4) : Shape::make2d(8, 7);
    ScalarField sk = random_field(rng, s);
    for (std::size_t i = 0; i < sk.size(); ++i) sk[i] *= 0.5;
    const JunctionParams jp{3, 4.0, 2.0};
    ScalarField w(s);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = g(rng);
    const auto grad = junction_map_backward(sk, jp, w);
    auto objective = [&](const ScalarField& q) {
      const auto j = junction_map(q, jp);
      double v = 0.0;
      for (std::size_t i = 0; i < j.size(); ++i) v += w[i] * j[i];
      return v;
    };
    for (std::size_t i = 0; i < sk.size(); ++i) {
      ScalarField a = sk, b = sk;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const double fd = (objective(a) - objective(b)) / 2e-6;
      REQUIRE(grad[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}
