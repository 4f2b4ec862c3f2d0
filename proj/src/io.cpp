#include "vasctree/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vasctree {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed JSON (" + e.what() + ")");
  }
}

Shape shape_from_dims(const std::vector<std::size_t>& dims, const std::string& where) {
  if (dims.size() == 2) return Shape::make2d(dims[0], dims[1]);
  if (dims.size() == 3) return Shape::make3d(dims[0], dims[1], dims[2]);
  throw DataError(where + ": dims must have 2 or 3 entries");
}

Spacing spacing_from(const std::vector<double>& s, int ndim, const std::string& where) {
  if (static_cast<int>(s.size()) != ndim) throw DataError(where + ": spacing must have one entry per axis");
  Spacing out{1.0, 1.0, 1.0};
  for (int a = 0; a < ndim; ++a) {
    if (!(s[static_cast<std::size_t>(a)] > 0.0)) throw DataError(where + ": spacing must be positive");
    out[static_cast<std::size_t>(a)] = s[static_cast<std::size_t>(a)];
  }
  return out;
}

Json dims_json(const Shape& s) {
  Json d = Json::array();
  for (int a = 0; a < s.ndim; ++a) d.push_back(s.ext[static_cast<std::size_t>(a)]);
  return d;
}

Json spacing_json(const Spacing& sp, int ndim) {
  Json d = Json::array();
  for (int a = 0; a < ndim; ++a) d.push_back(sp[static_cast<std::size_t>(a)]);
  return d;
}

Json coord_json(const Coord& c, int ndim) {
  Json p = Json::array();
  for (int a = 0; a < ndim; ++a) p.push_back(c[static_cast<std::size_t>(a)]);
  return p;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// PGM header tokens, skipping comments.
struct PgmReader {
  const std::string& data;
  std::size_t pos = 0;
  std::string token() {
    for (;;) {
      while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
      if (pos < data.size() && data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  }
};

std::size_t parse_size(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError(where + ": expected an integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError(where + ": expected a number, got '" + s + "'");
  return v;
}

}  // namespace

MaskGrid read_pgm(const std::string& path) {
  const std::string data = read_text(path);
  PgmReader r{data};
  if (r.token() != "P5") throw DataError(path + ": not a binary PGM (P5)");
  const std::size_t w = parse_size(r.token(), path + " width");
  const std::size_t h = parse_size(r.token(), path + " height");
  const std::size_t maxval = parse_size(r.token(), path + " maxval");
  if (w == 0 || h == 0) throw DataError(path + ": empty image");
  if (maxval == 0 || maxval > 255) throw DataError(path + ": maxval must be 1..255");
  ++r.pos;  // single whitespace before the raster
  if (r.pos + w * h > data.size()) throw DataError(path + ": truncated pixel data");
  MaskGrid m(Shape::make2d(w, h));
  std::set<unsigned> values;
  for (std::size_t i = 0; i < w * h; ++i) {
    m[i] = static_cast<std::uint8_t>(data[r.pos + i]);
    values.insert(m[i]);
  }
  const bool labels = values.count(100) || values.count(200);
  for (const unsigned v : values) {
    const bool ok = labels ? (v == 0 || v == 100 || v == 200 || v == 255) : (v == 0 || v == 1 || v == 255);
    if (!ok) {
      throw DataError(path + ": pixel value " + std::to_string(v) +
                      " is neither binary (0/255) nor an A/V label (0/100/200/255)");
    }
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (labels) m[i] = static_cast<std::uint8_t>(m[i] == 0 ? 0 : m[i] == 100 ? 1 : m[i] == 200 ? 2 : 3);
    else m[i] = m[i] ? 1 : 0;
  }
  return m;
}

void write_pgm(const std::string& path, const MaskGrid& mask, MaskEncoding enc) {
  if (mask.ndim() != 2) throw DataError("PGM output needs a 2D mask");
  std::string out = "P5\n" + std::to_string(mask.nx()) + " " + std::to_string(mask.ny()) + "\n255\n";
  static constexpr std::uint8_t lut[4] = {0, 100, 200, 255};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (enc == MaskEncoding::binary) {
      out.push_back(static_cast<char>(mask[i] ? 255 : 0));
    } else {
      if (mask[i] > 3) throw DataError("label " + std::to_string(mask[i]) + " outside the A/V alphabet");
      out.push_back(static_cast<char>(lut[mask[i]]));
    }
  }
  write_text(path, out);
}

MaskGrid read_nrrd(const std::string& path) {
  const std::string data = read_text(path);
  std::istringstream in(data);
  std::string line;
  std::getline(in, line);
  if (line.rfind("NRRD", 0) != 0) throw DataError(path + ": missing NRRD magic");
  std::vector<std::size_t> sizes;
  std::vector<double> spacings;
  std::string type, encoding = "raw", endian = "little", data_file;
  int dimension = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    if (line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(" \t="));
    std::istringstream vs(value);
    if (key == "type") type = value;
    else if (key == "dimension") dimension = static_cast<int>(parse_size(value, path + " dimension"));
    else if (key == "sizes") {
      std::string t;
      while (vs >> t) sizes.push_back(parse_size(t, path + " sizes"));
    } else if (key == "spacings") {
      std::string t;
      while (vs >> t) spacings.push_back(parse_double(t, path + " spacings"));
    } else if (key == "encoding") encoding = value;
    else if (key == "endian") endian = value;
    else if (key == "data file" || key == "datafile") data_file = value;
  }
  if (type != "uint8" && type != "uchar" && type != "unsigned char" && type != "uint8_t") {
    throw DataError(path + ": only uint8 NRRD volumes are supported (type '" + type + "')");
  }
  if (encoding != "raw") throw DataError(path + ": only raw NRRD encoding is supported");
  if (dimension != static_cast<int>(sizes.size())) throw DataError(path + ": 'sizes' does not match 'dimension'");
  if (spacings.empty()) throw DataError(path + ": missing field 'spacings' (units are required)");
  const Shape shape = shape_from_dims(sizes, path);
  const Spacing spacing = spacing_from(spacings, shape.ndim, path);
  std::string raw;
  if (!data_file.empty()) {
    raw = read_text((fs::path(path).parent_path() / data_file).string());
  } else {
    raw = data.substr(std::min<std::size_t>(static_cast<std::size_t>(in.tellg()), data.size()));
  }
  if (raw.size() < shape.size()) throw DataError(path + ": truncated voxel data");
  MaskGrid m(shape, spacing);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<std::uint8_t>(raw[i]);
    if (m[i] > 3) throw DataError(path + ": voxel value " + std::to_string(m[i]) + " outside 0..3");
  }
  return m;
}

void write_nrrd(const std::string& path, const MaskGrid& mask) {
  const fs::path p(path);
  const std::string raw_name = p.stem().string() + ".raw";
  std::ostringstream h;
  h << "NRRD0004\ntype: uint8\ndimension: " << mask.ndim() << "\nsizes:";
  for (int a = 0; a < mask.ndim(); ++a) h << ' ' << mask.shape().ext[static_cast<std::size_t>(a)];
  h << "\nspacings:";
  for (int a = 0; a < mask.ndim(); ++a) h << ' ' << format_number(mask.spacing()[static_cast<std::size_t>(a)]);
  h << "\nencoding: raw\nendian: little\ndata file: " << raw_name << "\n";
  write_text(path, h.str());
  std::string raw(mask.size(), '\0');
  for (std::size_t i = 0; i < mask.size(); ++i) raw[i] = static_cast<char>(mask[i]);
  write_text((p.parent_path() / raw_name).string(), raw);
}

MaskGrid read_mask(const std::string& path) {
  if (ends_with(path, ".pgm")) return read_pgm(path);
  if (ends_with(path, ".nrrd") || ends_with(path, ".nhdr")) return read_nrrd(path);
  throw DataError(path + ": unknown mask format (expected .pgm, .nrrd or .nhdr)");
}

void write_mask(const std::string& path, const MaskGrid& mask, MaskEncoding enc) {
  if (ends_with(path, ".pgm")) return write_pgm(path, mask, enc);
  if (ends_with(path, ".nrrd") || ends_with(path, ".nhdr")) return write_nrrd(path, mask);
  throw DataError(path + ": unknown mask format (expected .pgm, .nrrd or .nhdr)");
}

ScalarField read_field(const std::string& path) {
  const std::string where = path + ".json";
  const Json meta = parse_json(read_text(where), where);
  const auto dims = get<std::vector<std::size_t>>(meta, "dims", where);
  const Shape shape = shape_from_dims(dims, where);
  const Spacing spacing = spacing_from(get<std::vector<double>>(meta, "spacing", where), shape.ndim, where);
  const std::string raw = read_text(path);
  if (raw.size() != shape.size() * 4) throw DataError(path + ": expected " + std::to_string(shape.size() * 4) + " bytes");
  ScalarField f(shape, spacing);
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + static_cast<std::size_t>(b)])) << (8 * b);
    f[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return f;
}

void write_field(const std::string& path, const ScalarField& field) {
  std::string raw(field.size() * 4, '\0');
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(field[i]));
    for (int b = 0; b < 4; ++b) raw[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  write_text(path, raw);
  Json meta;
  meta["dims"] = dims_json(field.shape());
  meta["spacing"] = spacing_json(field.spacing(), field.ndim());
  write_text(path + ".json", dump(meta));
}

void write_table(const std::string& path, const ExponentTable& t) {
  std::string csv = "width_um,alpha,count\n";
  for (const auto& b : t.bins) {
    csv += format_number(b.width_um) + "," + format_number(b.alpha) + "," + std::to_string(b.count) + "\n";
  }
  write_text(path, csv);
  Json meta;
  meta["sigma_log"] = t.sigma_log;
  meta["ci_low"] = t.ci_low;
  meta["ci_high"] = t.ci_high;
  meta["class"] = to_string(t.cls);
  meta["n_records"] = t.n_records;
  meta["n_discarded"] = t.n_discarded;
  meta["pooled_alpha"] = t.pooled_alpha;
  meta["bin_width_um"] = t.bin_width_um;
  meta["fixed"] = t.fixed;
  write_text(path + ".json", dump(meta));
}

ExponentTable read_table(const std::string& path) {
  ExponentTable t;
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "width_um,alpha,count") throw DataError(path + ": expected header 'width_um,alpha,count'");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string w, a, c;
    if (!std::getline(ls, w, ',') || !std::getline(ls, a, ',') || !std::getline(ls, c)) {
      throw DataError(path + ": row " + std::to_string(row) + " needs three columns");
    }
    const std::string where = path + " row " + std::to_string(row);
    ExponentBin b{parse_double(w, where + " width_um"), parse_double(a, where + " alpha"), parse_size(c, where + " count")};
    if (!(b.width_um > 0.0) || !(b.alpha > 0.0)) throw DataError(where + ": width and alpha must be positive");
    if (!t.bins.empty() && !(b.width_um > t.bins.back().width_um)) throw DataError(where + ": widths must increase");
    t.bins.push_back(b);
  }
  if (t.bins.empty()) throw DataError(path + ": table has no rows");
  const std::string where = path + ".json";
  const Json meta = parse_json(read_text(where), where);
  t.sigma_log = get<double>(meta, "sigma_log", where);
  if (!(t.sigma_log > 0.0)) throw DataError(where + ": sigma_log must be positive");
  t.ci_low = get<double>(meta, "ci_low", where);
  t.ci_high = get<double>(meta, "ci_high", where);
  t.cls = vessel_class_from_string(get<std::string>(meta, "class", where));
  t.n_records = get<std::size_t>(meta, "n_records", where);
  if (meta.contains("n_discarded")) t.n_discarded = get<std::size_t>(meta, "n_discarded", where);
  if (meta.contains("pooled_alpha")) t.pooled_alpha = get<double>(meta, "pooled_alpha", where);
  if (meta.contains("bin_width_um")) t.bin_width_um = get<double>(meta, "bin_width_um", where);
  if (meta.contains("fixed")) t.fixed = get<bool>(meta, "fixed", where);
  return t;
}

std::string graph_to_json(const VesselGraph& g) {
  Json j;
  j["spacing"] = spacing_json(g.spacing, g.ndim);
  j["class"] = to_string(g.cls);
  j["scale"] = g.scale;
  j["nodes"] = Json::array();
  for (const auto& n : g.nodes) {
    Json node;
    node["id"] = n.id;
    node["pos"] = coord_json(n.pos, g.ndim);
    node["kind"] = to_string(n.kind);
    j["nodes"].push_back(node);
  }
  j["edges"] = Json::array();
  for (const auto& e : g.edges) {
    Json edge;
    edge["u"] = e.u;
    edge["v"] = e.v;
    Json poly = Json::array();
    for (const auto& c : e.polyline) poly.push_back(coord_json(c, g.ndim));
    edge["polyline"] = poly;
    edge["length_px"] = e.length_px;
    edge["radius_px"] = e.radius_px;
    edge["radius_um"] = e.radius_um;
    edge["class"] = to_string(e.cls);
    edge["low_confidence"] = e.low_confidence;
    edge["samples"] = e.samples;
    j["edges"].push_back(edge);
  }
  return dump(j);
}

VesselGraph graph_from_json(const std::string& text) {
  const std::string where = "graph";
  const Json j = parse_json(text, where);
  VesselGraph g;
  const auto spacing = get<std::vector<double>>(j, "spacing", where);
  if (spacing.size() != 2 && spacing.size() != 3) throw DataError("graph: spacing must have 2 or 3 entries");
  g.ndim = static_cast<int>(spacing.size());
  g.spacing = spacing_from(spacing, g.ndim, where);
  g.cls = vessel_class_from_string(get<std::string>(j, "class", where));
  if (j.contains("scale")) g.scale = get<double>(j, "scale", where);
  else g.scale = *std::min_element(spacing.begin(), spacing.end());
  if (!(g.scale > 0.0)) throw DataError("graph: scale must be positive");
  auto read_coord = [&](const Json& p, const std::string& w) {
    if (!p.is_array() || static_cast<int>(p.size()) != g.ndim) throw DataError(w + ": coordinate must have one entry per axis");
    Coord c{0, 0, 0};
    for (int a = 0; a < g.ndim; ++a) {
      if (!p[static_cast<std::size_t>(a)].is_number_integer()) throw DataError(w + ": coordinates must be integers");
      c[static_cast<std::size_t>(a)] = p[static_cast<std::size_t>(a)].get<int>();
    }
    return c;
  };
  const Json& nodes = field(j, "nodes", where);
  if (!nodes.is_array()) throw DataError("graph: 'nodes' must be an array");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string w = "graph node " + std::to_string(k);
    GraphNode n;
    n.id = get<int>(nodes[k], "id", w);
    if (n.id != static_cast<int>(k)) throw DataError(w + ": node ids must be 0..n-1 in order");
    n.pos = read_coord(field(nodes[k], "pos", w), w + " pos");
    n.kind = node_kind_from_string(get<std::string>(nodes[k], "kind", w));
    g.nodes.push_back(n);
  }
  const Json& edges = field(j, "edges", where);
  if (!edges.is_array()) throw DataError("graph: 'edges' must be an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string w = "graph edge " + std::to_string(k);
    GraphEdge e;
    e.id = static_cast<int>(k);
    e.u = get<int>(edges[k], "u", w);
    e.v = get<int>(edges[k], "v", w);
    const int n = static_cast<int>(g.nodes.size());
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) throw DataError(w + ": endpoint is not a node id");
    const Json& poly = field(edges[k], "polyline", w);
    if (!poly.is_array() || poly.empty()) throw DataError(w + ": polyline must be a non-empty array");
    for (const auto& p : poly) e.polyline.push_back(read_coord(p, w + " polyline"));
    e.length_px = get<double>(edges[k], "length_px", w);
    e.radius_px = get<double>(edges[k], "radius_px", w);
    e.radius_um = get<double>(edges[k], "radius_um", w);
    if (!(e.radius_px > 0.0) || !(e.radius_um > 0.0)) throw DataError(w + ": radii must be positive");
    if (!(e.length_px >= 0.0)) throw DataError(w + ": length_px must be >= 0");
    e.cls = edges[k].contains("class") ? vessel_class_from_string(get<std::string>(edges[k], "class", w)) : g.cls;
    if (edges[k].contains("low_confidence")) e.low_confidence = get<bool>(edges[k], "low_confidence", w);
    if (edges[k].contains("samples")) e.samples = get<std::vector<double>>(edges[k], "samples", w);
    g.edges.push_back(std::move(e));
  }
  return g;
}

VesselGraph read_graph(const std::string& path) {
  try {
    return graph_from_json(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_graph(const std::string& path, const VesselGraph& g) { write_text(path, graph_to_json(g)); }

std::string loss_report_json(const LossReport& rep, const LossConfig& cfg, const GradCheckResult* check) {
  Json j;
  j["total"] = rep.total;
  j["dice"] = rep.dice;
  j["mse"] = rep.mse;
  j["murray_sum"] = rep.murray_sum;
  j["radius"] = rep.radius;
  j["lambda"] = cfg.lambda;
  j["beta"] = cfg.beta;
  j["murray"] = Json::array();
  for (const auto& m : rep.murray) {
    Json term;
    term["class"] = to_string(m.cls);
    term["value"] = m.value;
    term["degenerate"] = m.degenerate;
    term["elements"] = Json::array();
    for (const auto& e : m.elements) {
      Json el;
      el["pos"] = coord_json(e.pos, 3);
      el["j"] = e.j;
      el["r_p"] = e.r_p;
      el["children"] = e.children;
      el["weights"] = e.weights;
      el["alpha_pred"] = e.alpha_pred;
      el["alpha_gt"] = e.alpha_gt;
      el["error"] = e.error;
      el["penalty"] = e.penalty;
      el["trimmed"] = e.trimmed;
      term["elements"].push_back(el);
    }
    j["murray"].push_back(term);
  }
  if (check) {
    Json gc;
    gc["checked"] = check->checked;
    gc["passed"] = check->passed;
    gc["pass_fraction"] = check->pass_fraction();
    gc["samples"] = Json::array();
    for (const auto& s : check->samples) {
      Json o;
      o["channel"] = s.channel;
      o["index"] = s.index;
      o["field"] = s.radius_field ? "rm_pred" : "p";
      o["analytic"] = s.analytic;
      o["numeric"] = s.numeric;
      o["rel_error"] = s.rel_error;
      o["tie"] = s.tie;
      o["pass"] = s.pass;
      gc["samples"].push_back(o);
    }
    j["gradcheck"] = gc;
  }
  return dump(j);
}

std::string simulation_json(const AvResult& r) {
  Json j;
  j["delta_p_av"] = r.delta_p_av;
  j["p_in"] = r.p_in;
  j["p_out"] = r.p_out;
  j["dp_a"] = r.dp_a;
  j["dp_v"] = r.dp_v;
  j["venous_sign"] = to_string(r.sign);
  j["per_path"] = Json::array();
  for (const auto& p : r.per_path) {
    Json o;
    o["endpoint"] = p.endpoint;
    o["pos"] = coord_json(p.pos, 2);
    o["cum_dp"] = p.cum_dp;
    o["class"] = to_string(p.cls);
    j["per_path"].push_back(o);
  }
  Json flags = Json::array();
  for (const int e : r.removed_artery_edges) flags.push_back({{"removed_cycle_edge", e}, {"class", "artery"}});
  for (const int e : r.removed_vein_edges) flags.push_back({{"removed_cycle_edge", e}, {"class", "vein"}});
  j["flags"] = flags;
  return dump(j);
}

std::string metrics_csv_header() {
  return "image_id,class,accuracy,dice,cldice,cal_c,cal_a,cal_l,cal,beta0_error,beta1_error,hausdorff\n";
}

std::string metrics_csv_row(const std::string& image_id, const MetricsRow& row) {
  return image_id + "," + row.cls + "," + format_number(row.accuracy) + "," + format_number(row.dice) + "," +
         format_number(row.cldice) + "," + format_number(row.cal.c) + "," + format_number(row.cal.a) + "," +
         format_number(row.cal.l) + "," + format_number(row.cal.product) + "," + std::to_string(row.betti.b0) + "," +
         std::to_string(row.betti.b1) + "," + format_number(row.hausdorff) + "\n";
}

std::string morph_stats_csv(const std::vector<MorphStats>& stats) {
  std::string out = "class,branch_angle_deg,radius_continuity,bifurcation_asymmetry,n_angles,n_paths,n_bifurcations\n";
  for (const auto& s : stats) {
    out += std::string(to_string(s.cls)) + "," + format_number(s.mean_branch_angle) + "," +
           format_number(s.mean_radius_continuity) + "," + format_number(s.mean_asymmetry) + "," +
           std::to_string(s.branch_angles_deg.size()) + "," + std::to_string(s.radius_continuity.size()) + "," +
           std::to_string(s.asymmetry.size()) + "\n";
  }
  return out;
}

}  // namespace vasctree
