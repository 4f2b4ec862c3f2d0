#pragma once

#include <string>
#include <vector>

#include "vasctree/grid.hpp"
#include "vasctree/hemo.hpp"
#include "vasctree/loss.hpp"
#include "vasctree/metrics.hpp"
#include "vasctree/murray.hpp"
#include "vasctree/vessgraph.hpp"

namespace vasctree {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

// Masks ---------------------------------------------------------------------

enum class MaskEncoding {
  binary,  // 0 / 255
  labels,  // 0 / 100 / 200 / 255 = bg / artery / vein / both
};

/// Binary PGM (P5, maxval <= 255). Pixels using 100 or 200 are read as an A/V
/// label map (0/100/200/255 -> 0..3); otherwise 0/255 or 0/1 is read as a 0/1
/// mask. Any other value is a DataError. Spacing is set to 1.
MaskGrid read_pgm(const std::string& path);
void write_pgm(const std::string& path, const MaskGrid& mask, MaskEncoding enc);

/// Minimal NRRD: uint8 raw little-endian data, attached (.nrrd) or detached
/// through a `data file:` line (.nhdr). Reads dims and spacings.
MaskGrid read_nrrd(const std::string& path);
/// Writes `<path>` as a detached header plus `<path stem>.raw`.
void write_nrrd(const std::string& path, const MaskGrid& mask);

/// Dispatches on extension: .pgm, .nrrd / .nhdr.
MaskGrid read_mask(const std::string& path);
void write_mask(const std::string& path, const MaskGrid& mask, MaskEncoding enc);

// Scalar fields -------------------------------------------------------------

/// Raw little-endian float32 values plus a `<path>.json` sidecar
/// {dims, spacing}.
ScalarField read_field(const std::string& path);
void write_field(const std::string& path, const ScalarField& field);

// Exponent tables -----------------------------------------------------------

/// CSV `width_um,alpha,count` plus a `<path>.json` sidecar with sigma_log,
/// ci_low, ci_high, class, n_records and the remaining table settings.
void write_table(const std::string& path, const ExponentTable& table);
ExponentTable read_table(const std::string& path);

// Graphs --------------------------------------------------------------------

std::string graph_to_json(const VesselGraph& g);
VesselGraph graph_from_json(const std::string& text);
VesselGraph read_graph(const std::string& path);
void write_graph(const std::string& path, const VesselGraph& g);

// Reports -------------------------------------------------------------------

std::string loss_report_json(const LossReport& rep, const LossConfig& cfg, const GradCheckResult* check);
std::string simulation_json(const AvResult& r);
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& image_id, const MetricsRow& row);
std::string morph_stats_csv(const std::vector<MorphStats>& stats);

// Files ---------------------------------------------------------------------

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace vasctree
