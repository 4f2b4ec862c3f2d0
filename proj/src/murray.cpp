#include "vasctree/murray.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace vasctree {
namespace {


double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (const double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void require_positive(std::span<const double> radii, const char* what) {
  for (const double r : radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DataError(std::string(what) + ": radii must be positive and finite");
  }
}

}  // namespace

double murray_log_residual(double alpha, double r_p, std::span<const double> children) {
  return alpha * std::log(r_p) - lse_capacity(children, alpha);
}

std::optional<double> solve_alpha(double r_p, std::span<const double> children) {
  if (children.size() < 2) throw DataError("solve_alpha: a bifurcation needs at least two children");
  const double parent[1] = {r_p};
  require_positive(parent, "solve_alpha");
  require_positive(children, "solve_alpha");
  // a child at least as wide as the parent makes f(alpha) < 0 for every alpha
  if (*std::max_element(children.begin(), children.end()) >= r_p) return std::nullopt;

  auto g = [&](double a) { return murray_log_residual(a, r_p, children); };
  double lo = 0.05, hi = 12.0;
  double glo = g(lo), ghi = g(hi);
  for (int k = 0; k < 6 && glo > 0.0; ++k) glo = g(lo /= 2.0);
  for (int k = 0; k < 4 && ghi < 0.0; ++k) ghi = g(hi *= 2.0);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if (glo > 0.0 || ghi < 0.0) return std::nullopt;

  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if (mid == lo || mid == hi) break;
    if (gm < 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  return std::abs(glo) <= std::abs(ghi) ? lo : hi;
}

double ExponentTable::lookup(double width_um) const {
  if (bins.empty()) throw DataError("exponent table has no bins");
  if (fixed || bins.size() == 1 || width_um <= bins.front().width_um) return bins.front().alpha;
  if (width_um >= bins.back().width_um) return bins.back().alpha;
  const auto it = std::lower_bound(bins.begin(), bins.end(), width_um,
                                   [](const ExponentBin& b, double w) { return b.width_um < w; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (width_um - lo.width_um) / (hi.width_um - lo.width_um);
  return lo.alpha + t * (hi.alpha - lo.alpha);
}

ExponentTable table_from_samples(std::span<const AlphaSample> samples, std::size_t n_discarded,
                                 VesselClass cls, const TableOptions& options) {
  if (samples.empty()) throw NumericalError("no accepted Murray records to build an exponent table from");
  if (!(options.bin_width_um > 0.0)) throw DataError("table bin width must be positive");
  ExponentTable t;
  t.bin_width_um = options.bin_width_um;
  t.cls = cls;
  t.n_records = samples.size();
  t.n_discarded = n_discarded;

  std::map<long long, std::pair<double, std::size_t>> sums;
  for (const auto& s : samples) {
    if (!(s.width_um > 0.0) || !std::isfinite(s.alpha)) throw DataError("exponent sample with invalid width or alpha");
    auto& acc = sums[static_cast<long long>(std::floor(s.width_um / options.bin_width_um))];
    acc.first += s.alpha;
    ++acc.second;
  }
  const long long first = sums.begin()->first, last = sums.rbegin()->first;
  for (long long b = first; b <= last; ++b) {
    ExponentBin bin;
    bin.width_um = (static_cast<double>(b) + 0.5) * options.bin_width_um;
    const auto it = sums.find(b);
    if (it != sums.end()) {
      bin.count = it->second.second;
      bin.alpha = it->second.first / static_cast<double>(bin.count);
    }
    t.bins.push_back(bin);
  }

  // anchors: well-populated bins, or any populated bin when none qualifies
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < t.bins.size(); ++i) {
    if (t.bins[i].count >= options.min_bin_count) anchors.push_back(i);
  }
  if (anchors.empty()) {
    for (std::size_t i = 0; i < t.bins.size(); ++i) {
      if (t.bins[i].count > 0) anchors.push_back(i);
    }
  }
  std::vector<double> filled(t.bins.size());
  for (std::size_t i = 0; i < t.bins.size(); ++i) {
    const auto hi = std::lower_bound(anchors.begin(), anchors.end(), i);
    if (hi != anchors.end() && *hi == i) {
      filled[i] = t.bins[i].alpha;
    } else if (hi == anchors.begin()) {
      filled[i] = t.bins[*hi].alpha;
    } else if (hi == anchors.end()) {
      filled[i] = t.bins[anchors.back()].alpha;
    } else {
      const std::size_t a = *(hi - 1), b = *hi;
      const double u = static_cast<double>(i - a) / static_cast<double>(b - a);
      filled[i] = t.bins[a].alpha + u * (t.bins[b].alpha - t.bins[a].alpha);
    }
  }
  for (std::size_t i = 0; i < t.bins.size(); ++i) t.bins[i].alpha = filled[i];

  // spread of log parent radius
  std::vector<double> logs;
  for (const auto& s : samples) logs.push_back(std::log(s.width_um));
  const double mean_log = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
  double ss = 0.0;
  for (const double l : logs) ss += (l - mean_log) * (l - mean_log);
  t.sigma_log = logs.size() >= 2 ? std::sqrt(ss / static_cast<double>(logs.size() - 1)) : 0.0;
  if (!(t.sigma_log > 0.0)) t.sigma_log = 1.0;

  // pooled mean with a percentile bootstrap interval
  std::vector<double> alphas;
  for (const auto& s : samples) alphas.push_back(s.alpha);
  t.pooled_alpha = std::accumulate(alphas.begin(), alphas.end(), 0.0) / static_cast<double>(alphas.size());
  std::mt19937_64 rng(options.bootstrap_seed);
  std::uniform_int_distribution<std::size_t> pick(0, alphas.size() - 1);
  std::vector<double> means(std::max<std::size_t>(options.bootstrap_resamples, 1));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < alphas.size(); ++k) s += alphas[pick(rng)];
    m = s / static_cast<double>(alphas.size());
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, means.size() - 1);
    return means[i] + (pos - static_cast<double>(i)) * (means[j] - means[i]);
  };
  t.ci_low = quantile(0.025);
  t.ci_high = quantile(0.975);
  return t;
}

ExponentTable build_table(std::span<const BifurcationRecord> records, double scale, VesselClass cls,
                          const TableOptions& options) {
  if (records.empty()) throw NumericalError("no bifurcation records to calibrate from");
  if (!(scale > 0.0)) throw DataError("build_table: scale must be positive");
  std::vector<AlphaSample> samples;
  std::size_t discarded = 0;
  for (const auto& r : records) {
    const auto a = solve_alpha(r.parent_px, r.children_px);
    if (a) samples.push_back({r.parent_px * scale, *a});
    else ++discarded;
  }
  return table_from_samples(samples, discarded, cls, options);
}

ExponentTable fixed_table(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DataError("fixed_table: alpha must be positive");
  ExponentTable t;
  t.bins.push_back({0.5, alpha, 0});
  t.sigma_log = 1.0;
  t.pooled_alpha = alpha;
  t.ci_low = alpha;
  t.ci_high = alpha;
  t.fixed = true;
  return t;
}

namespace {

std::vector<double> target_weights(double r_p_um, const ExponentTable& table) {
  if (!(r_p_um > 0.0)) throw DataError("alpha_target: parent radius must be positive");
  if (table.bins.empty()) throw DataError("alpha_target: empty exponent table");
  const double y = std::log(r_p_um);
  const double s2 = 2.0 * table.sigma_log * table.sigma_log;
  std::vector<double> logw(table.bins.size());
  for (std::size_t b = 0; b < logw.size(); ++b) {
    const double d = std::log(table.bins[b].width_um) - y;
    logw[b] = -d * d / s2;
  }
  const double z = log_sum_exp(logw);
  for (auto& w : logw) w = std::exp(w - z);
  return logw;
}

}  // namespace

double alpha_target(double r_p_um, const ExponentTable& table) {
  if (table.fixed) return table.bins.front().alpha;
  const auto w = target_weights(r_p_um, table);
  double a = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) a += w[b] * table.bins[b].alpha;
  return a;
}

double alpha_target_derivative(double r_p_um, const ExponentTable& table) {
  if (table.fixed) return 0.0;
  const auto w = target_weights(r_p_um, table);
  const double y = std::log(r_p_um);
  const double s2 = table.sigma_log * table.sigma_log;
  // d log w_b / dy = (x_b - y) / sigma^2, so d alpha / dy = Cov_w(alpha, that)
  double mean_a = 0.0, mean_d = 0.0, mean_ad = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    const double d = (std::log(table.bins[b].width_um) - y) / s2;
    mean_a += w[b] * table.bins[b].alpha;
    mean_d += w[b] * d;
    mean_ad += w[b] * table.bins[b].alpha * d;
  }
  return (mean_ad - mean_a * mean_d) / r_p_um;
}

double lse_capacity(std::span<const double> children, double alpha) {
  if (children.empty()) throw DataError("lse_capacity: no children");
  require_positive(children, "lse_capacity");
  std::vector<double> x(children.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = alpha * std::log(children[i]);
  return log_sum_exp(x);
}

std::vector<double> child_weights(std::span<const double> children, double tau) {
  if (children.empty()) throw DataError("child_weights: no children");
  if (!(tau > 0.0)) throw DataError("child_weights: temperature must be positive");
  require_positive(children, "child_weights");
  const double mx = *std::max_element(children.begin(), children.end());
  std::vector<double> z(children.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = children[i] / (tau * mx);
  const double lse = log_sum_exp(z);
  for (auto& v : z) v = std::exp(v - lse);
  return z;
}

std::vector<double> default_alpha_candidates() {
  std::vector<double> c;
  for (int k = 5; k <= 60; ++k) c.push_back(k / 10.0);
  return c;
}

AlphaPredictedGrad alpha_predicted_grad(double r_p, std::span<const double> children,
                                        std::span<const double> candidates, double temperature) {
  if (candidates.empty()) throw DataError("alpha_predicted: empty candidate set");
  if (!(temperature > 0.0)) throw DataError("alpha_predicted: temperature must be positive");
  const double parent[1] = {r_p};
  require_positive(parent, "alpha_predicted");
  require_positive(children, "alpha_predicted");
  const std::size_t n = children.size(), k = candidates.size();
  const double lp = std::log(r_p);
  std::vector<double> lc(n);
  for (std::size_t i = 0; i < n; ++i) lc[i] = std::log(children[i]);

  std::vector<double> resid(k), logits(k);
  std::vector<std::vector<double>> soft(k, std::vector<double>(n));
  for (std::size_t c = 0; c < k; ++c) {
    const double a = candidates[c];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a * lc[i];
    const double lse = log_sum_exp(x);
    for (std::size_t i = 0; i < n; ++i) soft[c][i] = std::exp(x[i] - lse);
    resid[c] = a * lp - lse;
    logits[c] = -resid[c] * resid[c] / temperature;
  }
  const double z = log_sum_exp(logits);
  std::vector<double> pi(k);
  AlphaPredictedGrad out;
  for (std::size_t c = 0; c < k; ++c) {
    pi[c] = std::exp(logits[c] - z);
    out.value += candidates[c] * pi[c];
  }
  out.d_children.assign(n, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    // d value / d e_c, then e_c = resid_c^2
    const double g_e = -pi[c] * (candidates[c] - out.value) / temperature;
    const double g_r = g_e * 2.0 * resid[c];
    out.d_parent += g_r * candidates[c] / r_p;
    for (std::size_t i = 0; i < n; ++i) out.d_children[i] -= g_r * candidates[c] * soft[c][i] / children[i];
  }
  return out;
}

double alpha_predicted(double r_p, std::span<const double> children, std::span<const double> candidates,
                       double temperature) {
  return alpha_predicted_grad(r_p, children, candidates, temperature).value;
}

}  // namespace vasctree
