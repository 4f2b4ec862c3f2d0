#include "vasctree/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"
#include "vasctree/vessgraph.hpp"

namespace vasctree {
namespace {

std::size_t count_and(const MaskGrid& a, const MaskGrid& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
  return n;
}

MaskGrid binary(const MaskGrid& m) {
  MaskGrid out(m.shape(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1 : 0;
  return out;
}

}  // namespace

double accuracy(const MaskGrid& pred, const MaskGrid& gt) {
  require_same_shape(pred, gt, "accuracy");
  if (gt.size() == 0) throw DataError("accuracy: empty grid");
  std::size_t same = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) same += pred[i] == gt[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(gt.size());
}

double dice(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls) {
  require_same_shape(pred, gt, "dice");
  const MaskGrid p = class_mask(pred, cls), g = class_mask(gt, cls);
  const std::size_t np = count_foreground(p), ng = count_foreground(g);
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(count_and(p, g)) / static_cast<double>(np + ng);
}

double cldice(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls) {
  require_same_shape(pred, gt, "cldice");
  const MaskGrid p = class_mask(pred, cls), g = class_mask(gt, cls);
  const std::size_t np = count_foreground(p), ng = count_foreground(g);
  if (np + ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const MaskGrid sp = thin(p), sg = thin(g);
  const double tprec = static_cast<double>(count_and(sp, g)) / static_cast<double>(count_foreground(sp));
  const double tsens = static_cast<double>(count_and(sg, p)) / static_cast<double>(count_foreground(sg));
  if (tprec + tsens == 0.0) return 0.0;
  return 2.0 * tprec * tsens / (tprec + tsens);
}

CalScore cal(const MaskGrid& pred, const MaskGrid& gt, int radius) {
  require_same_shape(pred, gt, "cal");
  const MaskGrid p = binary(pred), g = binary(gt);
  const std::size_t ng = count_foreground(g);
  if (ng == 0) throw DataError("cal: ground truth mask is empty");
  const int conn = default_fg_connectivity(g.ndim());
  CalScore s;
  const double comp_diff = std::abs(components(p, conn).count - components(g, conn).count);
  s.c = 1.0 - std::min(1.0, comp_diff / static_cast<double>(ng));

  const MaskGrid dp = morph(p, MorphOp::dilate, radius), dg = morph(g, MorphOp::dilate, radius);
  std::size_t a_num = 0, a_den = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    a_num += ((dp[i] && g[i]) || (p[i] && dg[i])) ? 1 : 0;
    a_den += (p[i] || g[i]) ? 1 : 0;
  }
  s.a = static_cast<double>(a_num) / static_cast<double>(a_den);

  const MaskGrid tp = thin(p), tg = thin(g);
  std::size_t l_num = 0, l_den = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    l_num += ((tp[i] && dg[i]) || (dp[i] && tg[i])) ? 1 : 0;
    l_den += (tp[i] || tg[i]) ? 1 : 0;
  }
  s.l = l_den ? static_cast<double>(l_num) / static_cast<double>(l_den) : 0.0;
  s.product = s.c * s.a * s.l;
  return s;
}

BettiNumbers betti(const MaskGrid& mask) {
  const MaskGrid m = binary(mask);
  BettiNumbers b;
  b.b0 = components(m, default_fg_connectivity(m.ndim())).count;
  if (m.ndim() == 3) {
    b.b1 = skeleton_cycle_rank(thin(m));
    return b;
  }
  MaskGrid bg(Shape::make2d(m.nx() + 2, m.ny() + 2), m.spacing(), 1);
  for (std::size_t y = 0; y < m.ny(); ++y)
    for (std::size_t x = 0; x < m.nx(); ++x) bg.at(x + 1, y + 1) = m.at(x, y) ? 0 : 1;
  b.b1 = components(bg, default_bg_connectivity(2)).count - 1;
  return b;
}

BettiError betti_error(const MaskGrid& pred, const MaskGrid& gt) {
  require_same_shape(pred, gt, "betti_error");
  const BettiNumbers p = betti(pred), g = betti(gt);
  return {std::abs(p.b0 - g.b0), std::abs(p.b1 - g.b1)};
}

MaskGrid boundary(const MaskGrid& mask) {
  MaskGrid out(mask.shape(), mask.spacing());
  const auto& face = neighbor_offsets(mask.ndim(), default_bg_connectivity(mask.ndim()));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const Coord c = mask.coord(i);
    for (const auto& o : face) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!mask.contains(n) || !mask.at(n)) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

double hausdorff(const MaskGrid& pred, const MaskGrid& gt) {
  require_same_shape(pred, gt, "hausdorff");
  const MaskGrid bp = boundary(binary(pred)), bg = boundary(binary(gt));
  if (count_foreground(bp) == 0 || count_foreground(bg) == 0) {
    throw DataError("hausdorff: both masks must be non-empty");
  }
  const auto w = axis_weights(gt.spacing(), gt.ndim(), EdtUnits::physical);
  const ScalarField to_g = squared_distance_to(bg, w), to_p = squared_distance_to(bp, w);
  double d2 = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (bp[i]) d2 = std::max(d2, to_g[i]);
    if (bg[i]) d2 = std::max(d2, to_p[i]);
  }
  return std::sqrt(d2);
}

MetricsRow evaluate(const MaskGrid& pred, const MaskGrid& gt, VesselClass cls, int cal_radius) {
  require_same_shape(pred, gt, "metrics");
  MetricsRow row;
  row.cls = to_string(cls);
  row.accuracy = accuracy(pred, gt);
  row.dice = dice(pred, gt, cls);
  row.cldice = cldice(pred, gt, cls);
  const MaskGrid p = class_mask(pred, cls), g = class_mask(gt, cls);
  row.cal = cal(p, g, cal_radius);
  row.betti = betti_error(p, g);
  row.hausdorff = hausdorff(p, g);
  return row;
}

}  // namespace vasctree
