#include "vasctree/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "vasctree/raster.hpp"

namespace vasctree {

void validate(const LossConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !(cfg.beta >= 0.0)) throw DataError("loss weights lambda and beta must be >= 0");
  if (!(cfg.trim_fraction >= 0.0 && cfg.trim_fraction < 1.0)) throw DataError("trim fraction must lie in [0, 1)");
  if (!(cfg.tau > 0.0)) throw DataError("child weighting temperature must be positive");
  if (!(cfg.argmin_temperature > 0.0)) throw DataError("soft-argmin temperature must be positive");
  if (!(cfg.scale > 0.0)) throw DataError("loss scale must be positive");
  if (cfg.candidates.empty()) throw DataError("soft-argmin candidate set is empty");
  if (cfg.iterations < 0) throw DataError("soft-skeleton iteration count must be >= 0");
}

double dice_loss(const ScalarField& p, const MaskGrid& gt, double eps) {
  require_same_shape(p, gt, "dice_loss");
  double inter = 0.0, sp = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = gt[i] ? 1.0 : 0.0;
    inter += p[i] * g;
    sp += p[i];
    sg += g;
  }
  return 1.0 - (2.0 * inter + eps) / (sp + sg + eps);
}

double mse_loss(const ScalarField& p, const MaskGrid& gt) {
  require_same_shape(p, gt, "mse_loss");
  if (p.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - (gt[i] ? 1.0 : 0.0);
    s += d * d;
  }
  return s / static_cast<double>(p.size());
}

double radius_loss(const ScalarField& rm_pred, const ScalarField& rm_gt, const ScalarField& sk) {
  require_same_shape(rm_pred, rm_gt, "radius_loss");
  require_same_shape(rm_pred, sk, "radius_loss");
  if (sk.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < sk.size(); ++i) s += std::abs(rm_pred[i] * sk[i] - rm_gt[i] * sk[i]);
  return s / static_cast<double>(sk.size());
}

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0; }

// Murray penalty from an evaluated soft skeleton. Adds d(term)/d sk into
// grad_sk and d(term)/d rm into grad_rm when they are non-null.
MurrayTerm murray_from_skeleton(const ScalarField& sk, const ScalarField& rm, const ExponentTable& table,
                                const LossConfig& cfg, ScalarField* grad_sk, ScalarField* grad_rm) {
  MurrayTerm term;
  term.cls = table.cls;
  const ScalarField j = junction_map(sk, cfg.junction);
  const auto& offs = neighbor_offsets(sk.ndim(), default_fg_connectivity(sk.ndim()));

  for (std::size_t i = 0; i < sk.size(); ++i) {
    if (!(j[i] > cfg.junction_threshold)) continue;
    const Coord c = sk.coord(i);
    std::vector<std::size_t> nbs;
    for (const auto& o : offs) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (sk.contains(n) && sk.at(n) > 0.5) nbs.push_back(sk.index(n));
    }
    // one representative (largest radius) per connected arm of the neighbourhood
    std::vector<std::size_t> arms;
    std::vector<int> arm_of(nbs.size(), -1);
    for (std::size_t a = 0; a < nbs.size(); ++a) {
      if (arm_of[a] >= 0) continue;
      const int id = static_cast<int>(arms.size());
      arms.push_back(nbs[a]);
      std::vector<std::size_t> stack{a};
      arm_of[a] = id;
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const Coord pc = sk.coord(nbs[cur]);
        if (rm[nbs[cur]] > rm[arms.back()]) arms.back() = nbs[cur];
        for (std::size_t b = 0; b < nbs.size(); ++b) {
          if (arm_of[b] >= 0) continue;
          const Coord pb = sk.coord(nbs[b]);
          const int d = std::max({std::abs(pc[0] - pb[0]), std::abs(pc[1] - pb[1]), std::abs(pc[2] - pb[2])});
          if (d != 1) continue;
          arm_of[b] = id;
          stack.push_back(b);
        }
      }
    }
    if (arms.size() < 3) continue;
    bool positive = true;
    for (const std::size_t n : arms) positive = positive && rm[n] > 0.0;
    if (!positive) continue;
    std::size_t parent = arms.front();
    for (const std::size_t n : arms) {
      if (rm[n] > rm[parent]) parent = n;
    }
    MurrayElement e;
    e.index = i;
    e.pos = c;
    e.j = j[i];
    e.parent_cell = parent;
    e.r_p = rm[parent];
    for (const std::size_t n : arms) {
      if (n == parent) continue;
      e.child_cells.push_back(n);
      e.children.push_back(rm[n]);
    }
    e.weights = child_weights(e.children, cfg.tau);
    e.alpha_pred = alpha_predicted(e.r_p, e.children, cfg.candidates, cfg.argmin_temperature);
    e.alpha_gt = alpha_target(e.r_p * cfg.scale, table);
    e.error = (e.alpha_pred - e.alpha_gt) * (e.alpha_pred - e.alpha_gt);
    e.penalty = e.j * e.error;
    term.elements.push_back(std::move(e));
  }
  if (term.elements.empty()) return term;

  // drop the largest errors; ties keep the earlier cell
  std::vector<std::size_t> order(term.elements.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return term.elements[a].error > term.elements[b].error;
  });
  const auto drop = static_cast<std::size_t>(std::floor(cfg.trim_fraction * static_cast<double>(order.size())));
  for (std::size_t k = 0; k < drop; ++k) term.elements[order[k]].trimmed = true;

  double num = 0.0, den = 0.0;
  for (const auto& e : term.elements) {
    if (e.trimmed) continue;
    num += e.penalty;
    den += e.j;
  }
  if (!(den > 0.0)) return term;
  term.degenerate = false;
  term.value = num / den;
  if (!grad_sk && !grad_rm) return term;

  ScalarField grad_j(sk.shape(), sk.spacing(), 0.0);
  for (const auto& e : term.elements) {
    if (e.trimmed) continue;
    grad_j[e.index] += (e.error - term.value) / den;
    if (!grad_rm) continue;
    const double g_err = e.j / den;
    const double g_pred = g_err * 2.0 * (e.alpha_pred - e.alpha_gt);
    const double g_gt = -g_pred;
    const auto ap = alpha_predicted_grad(e.r_p, e.children, cfg.candidates, cfg.argmin_temperature);
    (*grad_rm)[e.parent_cell] +=
        g_pred * ap.d_parent + g_gt * alpha_target_derivative(e.r_p * cfg.scale, table) * cfg.scale;
    for (std::size_t k = 0; k < e.child_cells.size(); ++k) (*grad_rm)[e.child_cells[k]] += g_pred * ap.d_children[k];
  }
  if (grad_sk) {
    const ScalarField g = junction_map_backward(sk, cfg.junction, grad_j);
    for (std::size_t i = 0; i < g.size(); ++i) (*grad_sk)[i] += g[i];
  }
  return term;
}

int resolve_iterations(const ScalarField& p, const LossConfig& cfg) {
  return cfg.iterations > 0 ? cfg.iterations : default_soft_iterations(p);
}

}  // namespace

MurrayTerm murray_loss(const ScalarField& p, const ScalarField& rm_pred, const ExponentTable& table,
                       const LossConfig& cfg, ScalarField* grad_p, ScalarField* grad_rm) {
  validate(cfg);
  require_same_shape(p, rm_pred, "murray_loss");
  if (grad_p) require_same_shape(p, *grad_p, "murray_loss gradient");
  if (grad_rm) require_same_shape(p, *grad_rm, "murray_loss gradient");
  SoftSkeletonTape tape;
  const ScalarField sk = soft_skeleton(p, resolve_iterations(p, cfg), tape);
  ScalarField grad_sk(p.shape(), p.spacing(), 0.0);
  MurrayTerm term = murray_from_skeleton(sk, rm_pred, table, cfg, grad_p ? &grad_sk : nullptr, grad_rm);
  if (grad_p) {
    const ScalarField g = soft_skeleton_backward(tape, grad_sk);
    for (std::size_t i = 0; i < g.size(); ++i) (*grad_p)[i] += g[i];
  }
  return term;
}

LossReport total_loss(const std::vector<LossChannel>& channels, const LossConfig& cfg, bool with_gradients) {
  validate(cfg);
  if (channels.empty()) throw DataError("total_loss: no channels");
  for (const auto& ch : channels) {
    require_same_shape(ch.p, ch.gt, "total_loss");
    require_same_shape(ch.p, ch.rm_pred, "total_loss");
    require_same_shape(ch.p, ch.rm_gt, "total_loss");
  }
  LossReport rep;
  double inter = 0.0, sp = 0.0, sg = 0.0, sq = 0.0, rad = 0.0;
  std::size_t cells = 0;
  std::vector<ScalarField> sks;
  std::vector<SoftSkeletonTape> tapes(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    sks.push_back(soft_skeleton(ch.p, resolve_iterations(ch.p, cfg), tapes[c]));
    for (std::size_t i = 0; i < ch.p.size(); ++i) {
      const double g = ch.gt[i] ? 1.0 : 0.0;
      inter += ch.p[i] * g;
      sp += ch.p[i];
      sg += g;
      sq += (ch.p[i] - g) * (ch.p[i] - g);
      rad += std::abs(ch.rm_pred[i] * sks[c][i] - ch.rm_gt[i] * sks[c][i]);
    }
    cells += ch.p.size();
  }
  const double n = static_cast<double>(std::max<std::size_t>(cells, 1));
  const double dice_num = 2.0 * inter + cfg.dice_eps, dice_den = sp + sg + cfg.dice_eps;
  rep.dice = 1.0 - dice_num / dice_den;
  rep.mse = sq / n;
  rep.radius = rad / n;

  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    ScalarField grad_sk(ch.p.shape(), ch.p.spacing(), 0.0);
    ScalarField grad_rm(ch.p.shape(), ch.p.spacing(), 0.0);
    ExponentTable table = ch.table;
    table.cls = ch.cls;
    const bool murray_grads = with_gradients && cfg.lambda != 0.0;
    rep.murray.push_back(murray_from_skeleton(sks[c], ch.rm_pred, table, cfg, murray_grads ? &grad_sk : nullptr,
                                              murray_grads ? &grad_rm : nullptr));
    rep.murray_sum += rep.murray.back().value;
    if (!with_gradients) continue;

    for (std::size_t i = 0; i < grad_sk.size(); ++i) {
      grad_sk[i] *= cfg.lambda;
      grad_rm[i] *= cfg.lambda;
    }
    if (cfg.beta != 0.0) {
      for (std::size_t i = 0; i < ch.p.size(); ++i) {
        const double diff = ch.rm_pred[i] - ch.rm_gt[i];
        const double s = sign(diff * sks[c][i]) * cfg.beta / n;
        grad_rm[i] += s * sks[c][i];
        grad_sk[i] += s * diff;
      }
    }
    ScalarField grad_p = soft_skeleton_backward(tapes[c], grad_sk);
    for (std::size_t i = 0; i < ch.p.size(); ++i) {
      const double g = ch.gt[i] ? 1.0 : 0.0;
      grad_p[i] += -(2.0 * g * dice_den - dice_num) / (dice_den * dice_den);
      grad_p[i] += 2.0 * (ch.p[i] - g) / n;
    }
    rep.grad_p.push_back(std::move(grad_p));
    rep.grad_rm.push_back(std::move(grad_rm));
  }
  rep.total = rep.dice + rep.mse + cfg.lambda * rep.murray_sum + cfg.beta * rep.radius;
  return rep;
}

GradCheckResult gradient_check(const std::vector<LossChannel>& channels, const LossConfig& cfg, std::size_t cells,
                               std::uint64_t seed, double h, double tol, double floor) {
  validate(cfg);
  if (channels.empty()) throw DataError("gradient_check: no channels");
  // freeze the iteration count so perturbations cannot change it
  LossConfig fixed = cfg;
  if (fixed.iterations == 0) {
    for (const auto& ch : channels) fixed.iterations = std::max(fixed.iterations, default_soft_iterations(ch.p));
  }
  const LossReport base = total_loss(channels, fixed, true);

  std::vector<std::vector<std::uint8_t>> ties;
  for (const auto& ch : channels) {
    SoftSkeletonTape tape;
    soft_skeleton(ch.p, fixed.iterations, tape);
    ties.push_back(tape.near_tie);
  }

  std::vector<std::pair<std::size_t, std::size_t>> interior;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& p = channels[c].p;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Coord x = p.coord(i);
      bool inside = true;
      for (int a = 0; a < p.ndim(); ++a) {
        inside = inside && x[a] > 0 && static_cast<std::size_t>(x[a]) + 1 < p.shape().ext[a];
      }
      if (inside) interior.emplace_back(c, i);
    }
  }
  if (interior.empty()) throw DataError("gradient_check: grid has no interior cells");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picks(interior.size());
  std::iota(picks.begin(), picks.end(), 0);
  std::shuffle(picks.begin(), picks.end(), rng);
  picks.resize(std::min(cells, picks.size()));

  GradCheckResult out;
  auto probe = [&](std::size_t c, std::size_t i, bool radius) {
    std::vector<LossChannel> plus = channels, minus = channels;
    ScalarField& fp = radius ? plus[c].rm_pred : plus[c].p;
    ScalarField& fm = radius ? minus[c].rm_pred : minus[c].p;
    fp[i] += h;
    fm[i] -= h;
    const double lp = total_loss(plus, fixed, false).total;
    const double lm = total_loss(minus, fixed, false).total;
    GradCheckSample s;
    s.channel = c;
    s.index = i;
    s.radius_field = radius;
    s.numeric = (lp - lm) / (2.0 * h);
    s.analytic = radius ? base.grad_rm[c][i] : base.grad_p[c][i];
    s.rel_error = std::abs(s.analytic - s.numeric) / std::max({std::abs(s.analytic), std::abs(s.numeric), floor});
    s.tie = !radius && ties[c][i];
    s.pass = s.rel_error < tol;
    if (!s.tie) {
      ++out.checked;
      out.passed += s.pass ? 1 : 0;
    }
    out.samples.push_back(s);
  };
  for (const std::size_t k : picks) probe(interior[k].first, interior[k].second, false);
  for (const std::size_t k : picks) probe(interior[k].first, interior[k].second, true);
  return out;
}

}  // namespace vasctree
