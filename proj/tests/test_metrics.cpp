#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vasctree/metrics.hpp"
#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"

using namespace vasctree;
using namespace vt_test;

namespace {

MaskGrid disk(std::size_t n, int cx, int cy, int r_out, int r_in = -1) {
  MaskGrid m(Shape::make2d(n, n));
  for (int y = 0; y < static_cast<int>(n); ++y) {
    for (int x = 0; x < static_cast<int>(n); ++x) {
      const int d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d2 <= r_out * r_out && (r_in < 0 || d2 > r_in * r_in)) m.at(Coord{x, y, 0}) = 1;
    }
  }
  return m;
}

MaskGrid ribbon(std::size_t nx, std::size_t ny, int y0, int y1, int x0 = 3, int x1 = -1) {
  MaskGrid m(Shape::make2d(nx, ny));
  if (x1 < 0) x1 = static_cast<int>(nx) - 4;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) m.at(Coord{x, y, 0}) = 1;
  }
  return m;
}

MaskGrid set_and(const MaskGrid& a, const MaskGrid& b) {
  MaskGrid o(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] && b[i];
  return o;
}
MaskGrid set_or(const MaskGrid& a, const MaskGrid& b) {
  MaskGrid o(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] || b[i];
  return o;
}

CalScore oracle_cal(const MaskGrid& p, const MaskGrid& g, int r) {
  CalScore s;
  const double ng = count(g);
  s.c = 1.0 - std::min(1.0, std::abs(flood_count(p, 1, 8) - flood_count(g, 1, 8)) / ng);
  const auto dp = brute_dilate(p, r), dg = brute_dilate(g, r);
  s.a = count(set_or(set_and(dp, g), set_and(p, dg))) / static_cast<double>(count(set_or(p, g)));
  const auto tp = thin(p), tg = thin(g);
  const int denom = count(set_or(tp, tg));
  s.l = denom ? count(set_or(set_and(tp, dg), set_and(dp, tg))) / static_cast<double>(denom) : 1.0;
  s.product = s.c * s.a * s.l;
  return s;
}

}  // namespace

TEST_CASE("accuracy examples") {
  MaskGrid a(Shape::make2d(10, 10));
  CHECK(accuracy(a, a) == 1.0);
  MaskGrid b = a;
  b[17] = 1;
  CHECK(accuracy(a, b) == doctest::Approx(0.99).epsilon(1e-15));
  MaskGrid c(Shape::make2d(10, 10), {1.0, 1.0, 1.0}, 1);
  CHECK(accuracy(a, c) == 0.0);
  MaskGrid av = a;
  av[3] = 1;
  MaskGrid av2 = a;
  av2[3] = 2;
  CHECK(accuracy(av, av2) == doctest::Approx(0.99));
  CHECK_THROWS_AS(accuracy(a, MaskGrid(Shape::make2d(5, 5))), DataError);
}

TEST_CASE("dice and clDice examples") {
  const auto r = ribbon(30, 12, 4, 6);
  CHECK(dice(r, r) == 1.0);
  CHECK(cldice(r, r) == 1.0);
  const auto far = ribbon(30, 12, 9, 10);
  CHECK(dice(r, far) == 0.0);
  CHECK(cldice(r, far) == 0.0);
  const auto wide = ribbon(30, 12, 3, 7, 2, 26);
  CHECK(cldice(wide, r) == 1.0);
  CHECK(dice(wide, r) < 1.0);
  const MaskGrid empty(Shape::make2d(30, 12));
  CHECK(dice(empty, empty) == 1.0);
  CHECK(cldice(empty, empty) == 1.0);
}

TEST_CASE("metrics stay in the unit interval and clDice of a mask with itself is one") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 40; ++trial) {
    const MaskGrid a = random_shapes(rng, 40, 40, 6), b = random_shapes(rng, 40, 40, 6);
    if (!count(a) || !count(b)) continue;
    for (const double v : {dice(a, b), cldice(a, b)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto c = cal(a, b);
    for (const double v : {c.c, c.a, c.l, c.product}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(cldice(a, a) == 1.0);
    CHECK(dice(a, b) == doctest::Approx(2.0 * count(set_and(a, b)) / (count(a) + count(b))).epsilon(1e-15));
  }
}

TEST_CASE("class masks are used for A/V labels") {
  MaskGrid p(Shape::make2d(4, 1)), g(Shape::make2d(4, 1));
  p[0] = 1;
  p[1] = 2;
  g[0] = 1;
  g[1] = 1;
  CHECK(dice(p, g, VesselClass::artery) == doctest::Approx(2.0 / 3.0));
  CHECK(dice(p, g, VesselClass::single) == 1.0);
  p[1] = 3;
  CHECK(dice(p, g, VesselClass::artery) == 1.0);
}

TEST_CASE("CAL examples") {
  const auto g = ribbon(30, 12, 5, 5);
  const auto same = cal(g, g);
  CHECK(same.c == 1.0);
  CHECK(same.a == 1.0);
  CHECK(same.l == 1.0);
  CHECK(same.product == 1.0);
  MaskGrid split = g;
  split.at(14, 5) = 0;
  CHECK(cal(split, g).c == doctest::Approx(1.0 - 1.0 / count(g)).epsilon(1e-15));
  const auto wide = ribbon(30, 14, 4, 6);
  MaskGrid shifted(wide.shape());
  for (std::size_t i = 0; i < wide.size(); ++i) {
    const Coord c = wide.coord(i);
    const Coord d{c[0] + 3, c[1], 0};
    if (wide[i] && shifted.contains(d)) shifted.at(d) = 1;
  }
  const auto got = cal(shifted, wide);
  const auto want = oracle_cal(shifted, wide, 2);
  CHECK(got.c == want.c);
  CHECK(got.a == doctest::Approx(want.a).epsilon(1e-15));
  CHECK(got.l == doctest::Approx(want.l).epsilon(1e-15));
  CHECK_THROWS_AS(cal(g, MaskGrid(g.shape())), DataError);
}

TEST_CASE("CAL matches the set-arithmetic oracle on random masks") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 25; ++trial) {
    const MaskGrid a = random_shapes(rng, 28, 28, 5), b = random_shapes(rng, 28, 28, 5);
    if (!count(a) || !count(b)) continue;
    const int r = 1 + trial % 3;
    const auto got = cal(a, b, r);
    const auto want = oracle_cal(a, b, r);
    CHECK(got.c == doctest::Approx(want.c).epsilon(1e-15));
    CHECK(got.a == doctest::Approx(want.a).epsilon(1e-15));
    CHECK(got.l == doctest::Approx(want.l).epsilon(1e-15));
  }
}

TEST_CASE("Betti numbers of simple shapes") {
  const auto filled = disk(21, 10, 10, 6);
  CHECK(betti(filled).b0 == 1);
  CHECK(betti(filled).b1 == 0);
  const auto ring = disk(21, 10, 10, 7, 3);
  CHECK(betti(ring).b0 == 1);
  CHECK(betti(ring).b1 == 1);
  const auto two = set_or(disk(40, 9, 9, 7, 3), disk(40, 29, 29, 7, 3));
  CHECK(betti(two).b0 == 2);
  CHECK(betti(two).b1 == 2);
  const auto e = betti_error(filled, ring);
  CHECK(e.b0 == 0);
  CHECK(e.b1 == 1);
  CHECK(betti_error(ring, ring).b1 == 0);
}

TEST_CASE("Betti numbers match flood-fill oracles") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 80; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    const MaskGrid a = random_mask(rng, dim(rng), dim(rng));
    const auto b = betti(a);
    const auto o = brute_betti(a);
    REQUIRE(b.b0 == o.b0);
    REQUIRE(b.b1 == o.b1);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const MaskGrid a = random_mask(rng, 32, 32), b = random_mask(rng, 32, 32);
    const auto e = betti_error(a, b);
    const auto oa = brute_betti(a), ob = brute_betti(b);
    CHECK(e.b0 == std::abs(oa.b0 - ob.b0));
    CHECK(e.b1 == std::abs(oa.b1 - ob.b1));
  }
}

TEST_CASE("3D Betti numbers of a tube loop") {
  MaskGrid m(Shape::make3d(20, 20, 7));
  for (int t = 3; t <= 16; ++t) {
    for (int dz = -1; dz <= 1; ++dz) {
      for (int d = -1; d <= 1; ++d) {
        m.at(Coord{t, 3 + d, 3 + dz}) = 1;
        m.at(Coord{t, 16 + d, 3 + dz}) = 1;
        m.at(Coord{3 + d, t, 3 + dz}) = 1;
        m.at(Coord{16 + d, t, 3 + dz}) = 1;
      }
    }
  }
  const auto b = betti(m);
  CHECK(b.b0 == 1);
  CHECK(b.b1 == 1);
}

TEST_CASE("boundary cells") {
  const auto r = ribbon(10, 7, 2, 4, 2, 7);
  const auto b = boundary(r);
  for (const auto& c : brute_boundary(r)) CHECK(b.at(c) == 1);
  CHECK(count(b) == static_cast<int>(brute_boundary(r).size()));
}

TEST_CASE("Hausdorff examples") {
  MaskGrid a(Shape::make2d(10, 10)), b(Shape::make2d(10, 10));
  a.at(1, 1) = 1;
  b.at(4, 5) = 1;
  CHECK(hausdorff(a, b) == 5.0);
  CHECK(hausdorff(a, a) == 0.0);
  MaskGrid sq(Shape::make2d(12, 8)), moved(Shape::make2d(12, 8));
  for (int y = 2; y < 5; ++y) {
    for (int x = 1; x < 4; ++x) {
      sq.at(Coord{x, y, 0}) = 1;
      moved.at(Coord{x + 3, y, 0}) = 1;
    }
  }
  CHECK(hausdorff(sq, moved) == 3.0);
  MaskGrid s1(Shape::make2d(10, 10), {0.5, 2.0, 1.0}), s2(Shape::make2d(10, 10), {0.5, 2.0, 1.0});
  s1.at(1, 1) = 1;
  s2.at(4, 5) = 1;
  CHECK(hausdorff(s1, s2) == doctest::Approx(std::hypot(1.5, 8.0)));
  CHECK_THROWS_AS(hausdorff(a, MaskGrid(a.shape())), DataError);
}

TEST_CASE("Hausdorff matches brute force, is symmetric and obeys the triangle inequality") {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 30; ++trial) {
    MaskGrid a = random_shapes(rng, 30, 30, 4), b = random_shapes(rng, 30, 30, 4), c = random_shapes(rng, 30, 30, 4);
    if (!count(a) || !count(b) || !count(c)) continue;
    const double ab = hausdorff(a, b), ba = hausdorff(b, a);
    CHECK(ab == doctest::Approx(brute_hausdorff(a, b)).epsilon(1e-14));
    CHECK(ab == ba);
    CHECK(ab <= hausdorff(a, c) + hausdorff(c, b) + 1e-12);
  }
}

TEST_CASE("evaluate bundles every metric for a class") {
  const auto r = ribbon(30, 12, 4, 6);
  const auto row = evaluate(r, r, VesselClass::single);
  CHECK(row.accuracy == 1.0);
  CHECK(row.dice == 1.0);
  CHECK(row.cldice == 1.0);
  CHECK(row.cal.product == 1.0);
  CHECK(row.betti.b0 == 0);
  CHECK(row.hausdorff == 0.0);
}
