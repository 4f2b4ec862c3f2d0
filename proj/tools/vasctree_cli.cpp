#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vasctree/hemo.hpp"
#include "vasctree/io.hpp"
#include "vasctree/loss.hpp"
#include "vasctree/metrics.hpp"
#include "vasctree/murray.hpp"
#include "vasctree/parallel.hpp"
#include "vasctree/raster.hpp"
#include "vasctree/skeleton.hpp"
#include "vasctree/synth.hpp"
#include "vasctree/vessgraph.hpp"

namespace fs = std::filesystem;
using namespace vasctree;

namespace {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

std::vector<double> parse_list(const std::string& text, const std::string& flag, std::size_t min_n,
                               std::size_t max_n) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.size() < min_n || out.size() > max_n) {
    throw UsageError(flag + ": expected " + std::to_string(min_n) +
                     (min_n == max_n ? "" : ".." + std::to_string(max_n)) + " comma-separated values");
  }
  return out;
}

std::array<double, 3> parse_point(const std::string& text, const std::string& flag) {
  const auto v = parse_list(text, flag, 2, 3);
  return {v[0], v[1], v.size() > 2 ? v[2] : 0.0};
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

bool is_mask_path(const std::string& p) {
  const auto ext = fs::path(p).extension().string();
  return ext == ".pgm" || ext == ".nrrd" || ext == ".nhdr";
}

/// Binary masks carry only 0/1; label maps also use 2 (vein) or 3 (both).
bool is_label_map(const MaskGrid& m) {
  return std::any_of(m.values().begin(), m.values().end(), [](std::uint8_t v) { return v > 1; });
}

/// Applies an explicit spacing to a mask. 2D PGM files carry no units, so the
/// caller must supply one when physical units matter.
void apply_spacing(MaskGrid& m, const std::string& spacing, const std::string& flag) {
  if (spacing.empty()) return;
  const auto v = parse_list(spacing, flag, 1, static_cast<std::size_t>(m.ndim()));
  Spacing s{1.0, 1.0, 1.0};
  for (int a = 0; a < m.ndim(); ++a) s[static_cast<std::size_t>(a)] = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(a)];
  for (int a = 0; a < m.ndim(); ++a) {
    if (!(s[static_cast<std::size_t>(a)] > 0.0)) throw UsageError(flag + ": spacing must be positive");
  }
  m.set_spacing(s);
}

const std::map<std::string, VesselClass> kClassMap{
    {"single", VesselClass::single}, {"artery", VesselClass::artery}, {"vein", VesselClass::vein}};

// ---------------------------------------------------------------------------

struct EdtArgs {
  std::string input, output, spacing, units = "pixels";
};

void run_edt(const EdtArgs& a) {
  MaskGrid m = read_mask(a.input);
  apply_spacing(m, a.spacing, "--spacing");
  if (a.units == "physical" && m.ndim() == 2 && a.spacing.empty()) {
    throw UsageError("--spacing is required for physical units on a PGM mask");
  }
  write_field(a.output, edt(m, VesselClass::single, a.units == "physical" ? EdtUnits::physical : EdtUnits::pixels));
}

struct SkelArgs {
  std::string input, output;
  bool soft = false;
  int iters = 0;
};

void run_skeletonize(const SkelArgs& a) {
  if (a.soft) {
    ScalarField p = is_mask_path(a.input) ? ScalarField::from(class_mask(read_mask(a.input), VesselClass::single))
                                          : read_field(a.input);
    write_field(a.output, soft_skeleton(p, a.iters > 0 ? a.iters : default_soft_iterations(p)));
  } else {
    if (a.iters != 0) throw UsageError("--iters only applies with --soft");
    write_mask(a.output, thin(class_mask(read_mask(a.input), VesselClass::single)), MaskEncoding::binary);
  }
}

struct GraphArgs {
  std::string input, output, dataset, cls = "single";
  std::optional<double> um_per_px, fov_deg, fov_px;
  int min_moat = 2;
  std::size_t min_residual = 3;
};

void run_graph(const GraphArgs& a) {
  MaskGrid m = read_mask(a.input);
  std::optional<double> scale = a.um_per_px;
  if (!a.dataset.empty()) {
    if (scale) throw UsageError("--dataset and --um-per-px are mutually exclusive");
    scale = dataset_pixel_size(a.dataset);
    if (!scale) throw UsageError("--dataset: unknown dataset '" + a.dataset + "'");
  }
  if (a.fov_deg || a.fov_px) {
    if (scale) throw UsageError("--fov-deg/--fov-px cannot be combined with another scale flag");
    if (!a.fov_deg || !a.fov_px) throw UsageError("--fov-deg and --fov-px must be given together");
    scale = um_per_px_from_fov(*a.fov_deg, *a.fov_px);
  }
  if (!scale && m.ndim() == 2) {
    throw UsageError("missing pixel size: give --um-per-px, --dataset or --fov-deg/--fov-px");
  }
  if (scale && !(*scale > 0.0)) throw UsageError("--um-per-px must be positive");
  if (scale && m.ndim() == 2) m.set_spacing({*scale, *scale, 1.0});
  ExtractOptions opts;
  opts.scale = scale;
  opts.min_moat = a.min_moat;
  opts.min_residual = a.min_residual;
  const VesselClass cls = kClassMap.at(a.cls);
  // a binary mask is taken as the requested class in full
  opts.cls = is_label_map(m) ? cls : VesselClass::single;
  VesselGraph g = extract_graph(m, opts);
  g.cls = cls;
  for (auto& e : g.edges) e.cls = cls;
  write_graph(a.output, g);
}

struct CalibrateArgs {
  std::vector<std::string> inputs;
  std::string output;
  double bin_width = 1.0;
  std::size_t min_bin_count = 5, resamples = 1000;
  std::uint64_t seed = 42;
};

void run_calibrate(const CalibrateArgs& a) {
  std::vector<BifurcationRecord> records;
  std::optional<VesselClass> cls;
  for (const auto& path : a.inputs) {
    const VesselGraph g = read_graph(path);
    if (!cls) cls = g.cls;
    else if (*cls != g.cls) cls = VesselClass::single;
    for (auto r : bifurcations(g)) {
      r.parent_um = r.parent_px * g.scale;
      records.push_back(std::move(r));
    }
  }
  TableOptions opts{a.bin_width, a.min_bin_count, a.resamples, a.seed};
  std::vector<AlphaSample> samples;
  std::size_t discarded = 0;
  for (const auto& r : records) {
    const auto alpha = solve_alpha(r.parent_px, r.children_px);
    if (alpha) samples.push_back({r.parent_um, *alpha});
    else ++discarded;
  }
  if (samples.empty()) throw NumericalError("calibrate: no bifurcation produced an exponent (zero accepted records)");
  const ExponentTable t = table_from_samples(samples, discarded, cls.value_or(VesselClass::single), opts);
  write_table(a.output, t);
  std::cout << "class " << to_string(t.cls) << ": pooled alpha " << format_number(t.pooled_alpha) << ", 95% CI ["
            << format_number(t.ci_low) << ", " << format_number(t.ci_high) << "], " << t.n_records
            << " accepted, " << t.n_discarded << " discarded\n";
}

struct LossArgs {
  std::string prob, radius, gt, gt_radius, table, output, cls = "single";
  std::size_t gradcheck = 0;
  std::uint64_t seed = 1;
  LossConfig cfg;
};

void run_murray_loss(const LossArgs& a) {
  LossChannel ch;
  ch.cls = kClassMap.at(a.cls);
  ch.p = read_field(a.prob);
  ch.rm_pred = read_field(a.radius);
  MaskGrid gt = read_mask(a.gt);
  ch.gt = class_mask(gt, is_label_map(gt) ? ch.cls : VesselClass::single);
  ch.rm_gt = read_field(a.gt_radius);
  ch.table = read_table(a.table);
  require_same_shape(ch.p, ch.rm_pred, "--radius");
  require_same_shape(ch.p, ch.gt, "--gt");
  require_same_shape(ch.p, ch.rm_gt, "--gt-radius");
  validate(a.cfg);
  for (std::size_t i = 0; i < ch.p.size(); ++i) {
    if (!(ch.p[i] >= 0.0 && ch.p[i] <= 1.0)) throw DataError(a.prob + ": probabilities must lie in [0, 1]");
    if (!(ch.rm_pred[i] >= 0.0) || !std::isfinite(ch.rm_pred[i])) {
      throw DataError(a.radius + ": radii must be finite and >= 0");
    }
    if (!(ch.rm_gt[i] >= 0.0) || !std::isfinite(ch.rm_gt[i])) {
      throw DataError(a.gt_radius + ": radii must be finite and >= 0");
    }
  }
  const std::vector<LossChannel> channels{ch};
  const LossReport rep = total_loss(channels, a.cfg, false);
  std::optional<GradCheckResult> check;
  if (a.gradcheck > 0) check = gradient_check(channels, a.cfg, a.gradcheck, a.seed);
  emit(a.output, loss_report_json(rep, a.cfg, check ? &*check : nullptr));
}

struct MetricsArgs {
  std::string pred, gt, spacing, cls = "single", id, output;
  int cal_radius = 2;
  bool header = true;
};

void run_metrics(const MetricsArgs& a) {
  MaskGrid pred = read_mask(a.pred);
  MaskGrid gt = read_mask(a.gt);
  if (a.spacing.empty() && gt.ndim() == 2) throw UsageError("--spacing is required for PGM masks");
  apply_spacing(pred, a.spacing, "--spacing");
  apply_spacing(gt, a.spacing, "--spacing");
  require_same_shape(pred, gt, "--pred/--gt");
  const VesselClass cls = kClassMap.at(a.cls);
  const MetricsRow row = evaluate(pred, gt, cls, a.cal_radius);
  const std::string id = a.id.empty() ? fs::path(a.pred).stem().string() : a.id;
  emit(a.output, (a.header ? metrics_csv_header() : std::string()) + metrics_csv_row(id, row));
  if (a.output.empty()) return;
  nlohmann::ordered_json meta;
  meta["accuracy"] = "full label alphabet, background included";
  meta["class"] = a.cls;
  meta["cal_radius"] = a.cal_radius;
  std::vector<double> spacing(gt.spacing().begin(), gt.spacing().begin() + gt.ndim());
  meta["spacing"] = spacing;
  write_text(a.output + ".json", meta.dump(2) + "\n");
}

struct SimArgs {
  std::string artery, vein, disc, macula, table, artery_table, vein_table, sign = "paper", output;
  std::optional<double> alpha;
  SimConfig cfg;
};

void run_simulate(const SimArgs& a) {
  SimConfig cfg = a.cfg;
  cfg.disc = parse_point(a.disc, "--disc");
  const auto mac = parse_list(a.macula, "--macula", 3, 4);
  cfg.macula_center = {mac[0], mac[1], mac.size() == 4 ? mac[2] : 0.0};
  cfg.macula_radius = mac.back();
  cfg.sign = venous_sign_from_string(a.sign);
  validate(cfg);
  if (a.alpha && (!a.table.empty() || !a.artery_table.empty() || !a.vein_table.empty())) {
    throw UsageError("--alpha cannot be combined with a table");
  }
  auto table_for = [&](const std::string& specific) {
    if (!specific.empty()) return read_table(specific);
    if (!a.table.empty()) return read_table(a.table);
    return fixed_table(a.alpha.value_or(3.0));
  };
  const VesselGraph art = read_graph(a.artery);
  const VesselGraph ven = read_graph(a.vein);
  const FlowGraph fa = propagate(root_and_orient(art, cfg.disc, cfg.eta), cfg, table_for(a.artery_table));
  FlowGraph fv_in = root_and_orient(ven, cfg.disc, cfg.eta);
  fv_in.cls = VesselClass::vein;
  const FlowGraph fv = propagate(fv_in, cfg, table_for(a.vein_table));
  emit(a.output, simulation_json(delta_p_av(fa, fv, cfg)));
}

struct MorphArgs {
  std::vector<std::string> inputs;
  std::string output;
};

void run_morph_stats(const MorphArgs& a) {
  std::vector<MorphStats> stats;
  for (const auto& p : a.inputs) stats.push_back(morph_stats(read_graph(p)));
  emit(a.output, morph_stats_csv(stats));
}

struct SynthArgs {
  TreeParams params;
  std::string outdir;
  double artery_scale = 1.0, vein_scale = 1.0;
};

void write_tree(const SynthTree& t, const fs::path& dir, const std::string& prefix) {
  write_mask((dir / (prefix + "mask.pgm")).string(), t.mask, MaskEncoding::binary);
  write_graph((dir / (prefix + "graph.json")).string(), t.graph);
  write_field((dir / (prefix + "rm_gt.grid")).string(), t.rm_gt);
}

void run_synth_tree(const SynthArgs& a) {
  fs::create_directories(a.outdir);
  write_tree(gen_tree(a.params), a.outdir, "");
}

void run_synth_av(const SynthArgs& a) {
  fs::create_directories(a.outdir);
  const AvPair pair = gen_av_pair(a.params, a.artery_scale, a.vein_scale);
  const fs::path dir(a.outdir);
  write_tree(pair.artery, dir, "artery_");
  write_tree(pair.vein, dir, "vein_");
  write_mask((dir / "labels.pgm").string(), pair.labels, MaskEncoding::labels);
  nlohmann::ordered_json meta;
  meta["disc"] = {pair.disc[0], pair.disc[1]};
  meta["macula"] = {pair.macula_center[0], pair.macula_center[1], pair.macula_radius};
  write_text((dir / "scene.json").string(), meta.dump(2) + "\n");
}

void add_tree_flags(CLI::App* sub, SynthArgs& a) {
  sub->add_option("--alpha", a.params.alpha, "Murray exponent")->capture_default_str();
  sub->add_option("--depth", a.params.depth, "Bifurcation levels")->capture_default_str();
  sub->add_option("--root-radius", a.params.root_radius, "Root radius in pixels")->capture_default_str();
  sub->add_option("--branch-angle", a.params.branch_angle, "Sibling angle in degrees")->capture_default_str();
  sub->add_option("--length-ratio", a.params.length_ratio, "Child/parent length ratio")->capture_default_str();
  sub->add_option("--root-length", a.params.root_length, "Root length in pixels (0: 12 x root radius)");
  sub->add_option("--seed", a.params.seed, "Angle perturbation seed")->capture_default_str();
  sub->add_option("--um-per-px", a.params.scale, "Pixel size written into the graphs")->capture_default_str();
  sub->add_option("-o,--output", a.outdir, "Output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vascular tree analysis: graphs, Murray exponents, losses, metrics, haemodynamics"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: VASCTREE_THREADS or all cores)");

  EdtArgs edt_a;
  auto* edt_c = app.add_subcommand("edt", "Euclidean distance transform of a mask");
  edt_c->add_option("mask", edt_a.input)->required();
  edt_c->add_option("-o,--output", edt_a.output, "Output field (.grid)")->required();
  edt_c->add_option("--spacing", edt_a.spacing, "Cell size s or sx,sy[,sz]");
  edt_c->add_option("--units", edt_a.units)->check(CLI::IsMember({"pixels", "physical"}))->capture_default_str();

  SkelArgs sk_a;
  auto* sk_c = app.add_subcommand("skeletonize", "Hard thinning or soft skeleton");
  sk_c->add_option("input", sk_a.input, "Mask, or probability field with --soft")->required();
  sk_c->add_option("-o,--output", sk_a.output)->required();
  sk_c->add_flag("--soft", sk_a.soft, "Differentiable soft skeleton (field output)");
  sk_c->add_option("--iters", sk_a.iters, "Soft skeleton iterations (default: from the field)")->check(CLI::NonNegativeNumber);

  GraphArgs g_a;
  auto* g_c = app.add_subcommand("graph", "Extract a calibrated vessel graph");
  g_c->add_option("mask", g_a.input)->required();
  g_c->add_option("-o,--output", g_a.output, "Graph JSON")->required();
  g_c->add_option("--um-per-px", g_a.um_per_px, "Pixel size in µm");
  g_c->add_option("--dataset", g_a.dataset, "Known dataset pixel size (RITE, LES-AV, F-AVSeg, HRF-AV, ...)");
  g_c->add_option("--fov-deg", g_a.fov_deg, "Field of view in degrees");
  g_c->add_option("--fov-px", g_a.fov_px, "Field of view in pixels");
  g_c->add_option("--class", g_a.cls)->check(CLI::IsMember({"single", "artery", "vein"}))->capture_default_str();
  g_c->add_option("--min-moat", g_a.min_moat)->capture_default_str();
  g_c->add_option("--min-residual", g_a.min_residual)->capture_default_str();

  CalibrateArgs c_a;
  auto* c_c = app.add_subcommand("calibrate", "Build an exponent table from graphs");
  c_c->add_option("graphs", c_a.inputs)->required();
  c_c->add_option("-o,--output", c_a.output, "Table CSV")->required();
  c_c->add_option("--bin-width", c_a.bin_width, "Bin width in µm")->capture_default_str();
  c_c->add_option("--min-bin-count", c_a.min_bin_count)->capture_default_str();
  c_c->add_option("--resamples", c_a.resamples, "Bootstrap resamples")->capture_default_str();
  c_c->add_option("--seed", c_a.seed, "Bootstrap seed")->capture_default_str();

  LossArgs l_a;
  auto* l_c = app.add_subcommand("murray-loss", "Composite loss report");
  l_c->add_option("--prob", l_a.prob)->required();
  l_c->add_option("--radius", l_a.radius)->required();
  l_c->add_option("--gt", l_a.gt)->required();
  l_c->add_option("--gt-radius", l_a.gt_radius)->required();
  l_c->add_option("--table", l_a.table)->required();
  l_c->add_option("--class", l_a.cls)->check(CLI::IsMember({"single", "artery", "vein"}))->capture_default_str();
  l_c->add_option("--gradcheck", l_a.gradcheck, "Finite-difference check on n cells");
  l_c->add_option("--seed", l_a.seed, "Gradient check sampling seed")->capture_default_str();
  l_c->add_option("--lambda", l_a.cfg.lambda)->capture_default_str();
  l_c->add_option("--beta", l_a.cfg.beta)->capture_default_str();
  l_c->add_option("--tau", l_a.cfg.tau)->capture_default_str();
  l_c->add_option("--iters", l_a.cfg.iterations, "Soft skeleton iterations (0: from the field)");
  l_c->add_option("--um-per-px", l_a.cfg.scale, "Pixel size for table lookups")->capture_default_str();
  l_c->add_option("-o,--output", l_a.output, "Report JSON (default stdout)");

  MetricsArgs m_a;
  auto* m_c = app.add_subcommand("metrics", "Segmentation metrics CSV row");
  m_c->add_option("--pred", m_a.pred)->required();
  m_c->add_option("--gt", m_a.gt)->required();
  m_c->add_option("--spacing", m_a.spacing, "Cell size s or sx,sy[,sz]");
  m_c->add_option("--class", m_a.cls)->check(CLI::IsMember({"single", "artery", "vein"}))->capture_default_str();
  m_c->add_option("--id", m_a.id, "Image id column (default: prediction file stem)");
  m_c->add_option("--cal-radius", m_a.cal_radius)->capture_default_str();
  m_c->add_flag("!--no-header", m_a.header, "Omit the CSV header");
  m_c->add_option("-o,--output", m_a.output, "CSV (default stdout)");

  SimArgs s_a;
  auto* s_c = app.add_subcommand("simulate", "Poiseuille simulation and ΔP_AV");
  s_c->add_option("--artery", s_a.artery)->required();
  s_c->add_option("--vein", s_a.vein)->required();
  s_c->add_option("--disc", s_a.disc, "Disc centre x,y")->required();
  s_c->add_option("--macula", s_a.macula, "Macula cx,cy,r")->required();
  s_c->add_option("--table", s_a.table, "Exponent table for both classes");
  s_c->add_option("--artery-table", s_a.artery_table);
  s_c->add_option("--vein-table", s_a.vein_table);
  s_c->add_option("--alpha", s_a.alpha, "Fixed exponent when no table is given (default 3)");
  s_c->add_option("--venous-sign", s_a.sign)->check(CLI::IsMember({"paper", "physical"}))->capture_default_str();
  s_c->add_option("--p-in", s_a.cfg.p_in, "Inflow pressure in mmHg")->capture_default_str();
  s_c->add_option("--p-out", s_a.cfg.p_out, "Outflow pressure in mmHg")->capture_default_str();
  s_c->add_option("--eta", s_a.cfg.eta, "Viscosity")->capture_default_str();
  s_c->add_option("--k", s_a.cfg.k, "Pixel-to-pressure calibration")->capture_default_str();
  s_c->add_option("-o,--output", s_a.output, "Result JSON (default stdout)");

  MorphArgs mo_a;
  auto* mo_c = app.add_subcommand("morph-stats", "Branch angle, radius continuity and asymmetry");
  mo_c->add_option("graphs", mo_a.inputs)->required();
  mo_c->add_option("-o,--output", mo_a.output, "CSV (default stdout)");

  SynthArgs t_a, av_a;
  auto* syn_c = app.add_subcommand("synth", "Synthetic vessel trees");
  syn_c->require_subcommand(1);
  auto* tree_c = syn_c->add_subcommand("tree", "One binary tree: mask.pgm, graph.json, rm_gt.grid");
  add_tree_flags(tree_c, t_a);
  auto* av_c = syn_c->add_subcommand("av-pair", "Artery/vein pair with disc and macula");
  add_tree_flags(av_c, av_a);
  av_c->add_option("--artery-scale", av_a.artery_scale, "Artery radius multiplier")->capture_default_str();
  av_c->add_option("--vein-scale", av_a.vein_scale, "Vein radius multiplier")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::usage);
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (*edt_c) run_edt(edt_a);
    else if (*sk_c) run_skeletonize(sk_a);
    else if (*g_c) run_graph(g_a);
    else if (*c_c) run_calibrate(c_a);
    else if (*l_c) run_murray_loss(l_a);
    else if (*m_c) run_metrics(m_a);
    else if (*s_c) run_simulate(s_a);
    else if (*mo_c) run_morph_stats(mo_a);
    else if (*tree_c) run_synth_tree(t_a);
    else if (*av_c) run_synth_av(av_a);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}
