#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "treeid/dynamics.hpp"
#include "treeid/graph.hpp"
#include "treeid/prune.hpp"
#include "treeid/spectral.hpp"
#include "treeid/wiener.hpp"

namespace treeid::io {

namespace fs = std::filesystem;

/// Reads a whole JSON document. Throws IoError or ParseError.
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& doc);

/// {"nodes": [...], "edges": [[a, b], ...]} with the smaller label first.
nlohmann::json graph_to_json(const UndirectedGraph& g);
/// Throws SchemaError on a missing field, a duplicate edge or a bad entry.
UndirectedGraph graph_from_json(const nlohmann::json& doc);
UndirectedGraph load_graph(const fs::path& path);
void save_graph(const fs::path& path, const UndirectedGraph& g);

enum class PanelFormat { Csv, Binary };

/// Csv unless the extension is .bin.
PanelFormat panel_format_for(const fs::path& path);

/// Header row of labels, then one row per time step at round-trip precision.
void save_panel_csv(const fs::path& path, const TimeSeriesPanel& panel);
/// CSV carries no sampling interval; dt is taken from the argument.
TimeSeriesPanel load_panel_csv(const fs::path& path, double dt = 1.0);

/// Little-endian float64 data with sample k of node i at offset k*m + i,
/// plus a sidecar "<path>.json" holding {labels, n_samples, dt}.
void save_panel_binary(const fs::path& path, const TimeSeriesPanel& panel);
TimeSeriesPanel load_panel_binary(const fs::path& path);

void save_panel(const fs::path& path, const TimeSeriesPanel& panel);
TimeSeriesPanel load_panel(const fs::path& path, double csv_dt = 1.0);

/// JSON header {labels, grid, equivalent_segments, bin_correlation, data}
/// where data names a sibling file of F*m*m complex64 values ordered by
/// (f, i, k). Single precision: a loaded field matches to about 1e-7 relative.
void save_field(const fs::path& header, const SpectralDensityField& field);
SpectralDensityField load_field(const fs::path& header);

/// {nodes, edges: [{a, b, susceptance}], inertia: {node: v}, damping: {node: v},
///  grounding, noise: {node: {sigma, ar}}, dt, generators}. Per-node entries
/// default to 1 (inertia, damping, sigma) and 0 (ar); grounding defaults to
/// 0.01 times the smallest susceptance.
nlohmann::json model_to_json(const GridNetworkModel& model);
GridNetworkModel model_from_json(const nlohmann::json& doc);
GridNetworkModel load_model(const fs::path& path);
void save_model(const fs::path& path, const GridNetworkModel& model);

/// Square matrix with a leading label column and a label header row.
void save_scores_csv(const fs::path& path, const CouplingScores& scores);

/// Per-edge decision records of a reconstruction.
nlohmann::json provenance_to_json(const Reconstruction& rec);

}  // namespace treeid::io
