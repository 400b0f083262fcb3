#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "treeid/dynamics.hpp"
#include "treeid/error.hpp"
#include "treeid/graph.hpp"
#include "treeid/prune.hpp"
#include "treeid/spectral.hpp"
#include "treeid/wiener.hpp"

namespace treeid {

struct TopologyMetrics {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  bool exact_match = true;
  std::size_t symmetric_difference = 0;
};

/// Edge-set agreement of an estimate with the truth. Throws NodeSetMismatch.
TopologyMetrics compare_topologies(const UndirectedGraph& estimated, const UndirectedGraph& truth);

/// Bundled 39-bus tree: eight lines of the standard 46-line list removed, unit
/// susceptance, eleven generators with ten times the load inertia.
GridNetworkModel ieee39_tree_case();

/// Lines of the standard list that the bundled case leaves out.
std::vector<LabelEdge> ieee39_removed_lines();

/// Path 1-2-...-n with unit parameters and default grounding.
GridNetworkModel chain_case(std::size_t n, double dt = 0.1);

/// Stage failure inside run_pipeline or reconstruct_from_field. Keeps the
/// original code so config errors stay config errors.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

using StageTimings = std::vector<std::pair<std::string, double>>;

struct InferenceSettings {
  std::optional<double> ridge;
  ScoreMethod score = ScoreMethod::Auto;
  ThresholdPolicy policy;
  PruneMode mode = PruneMode::Strict;
};

struct FieldReconstruction {
  CouplingScores scores;
  KinSelection kin;
  Reconstruction reconstruction;
};

/// Wiener filters, coupling scores, kin thresholding and pruning of one field.
/// Stage errors are raised as StageError; timings are appended when given.
FieldReconstruction reconstruct_from_field(const SpectralDensityField& field,
                                           const InferenceSettings& settings,
                                           StageTimings* timings = nullptr);

struct ExperimentConfig {
  std::optional<GridNetworkModel> model;
  /// Ground truth for metrics; defaults to the model topology when simulating.
  std::optional<UndirectedGraph> truth;
  SimulationSettings simulation{200'000, 0, 1'000};
  bool skip_simulation = false;
  std::filesystem::path panel_path;
  double panel_dt = 1.0;
  WelchConfig welch;
  InferenceSettings inference;
  std::filesystem::path out_dir = ".";
  bool write_panel = false;
  bool write_field = false;

  /// Relative paths resolve against base_dir. Throws SchemaError or
  /// InvalidArgument.
  static ExperimentConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = ".");
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Throws InvalidArgument (missing model or panel, n_samples < 4 window_len)
  /// or IoError (panel file absent).
  void validate() const;
};

struct ScoreSummary {
  ScoreKind kind = ScoreKind::Magnitude;
  std::string policy;
  std::string rule;
  double threshold = 0.0;
  double max_score = 0.0;
  /// Smallest score among selected pairs and largest among the rest.
  double min_selected = 0.0;
  double max_rejected = 0.0;
};

struct ReconstructionReport {
  std::optional<UndirectedGraph> truth;
  UndirectedGraph kin;
  std::vector<LabelEdge> confirmed;
  UndirectedGraph tree;
  std::optional<TopologyMetrics> metrics;
  ScoreSummary scores;
  StageTimings timings;
  Reconstruction reconstruction;
};

/// simulate (or load) -> Welch -> Wiener -> scores -> kin -> prune -> metrics.
/// Writes report.json, provenance.json, kin.json, tree.json and scores.csv to
/// out_dir; on failure writes error.json next to whatever was produced and
/// rethrows as StageError.
ReconstructionReport run_pipeline(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ReconstructionReport& report, const ExperimentConfig& cfg);

}  // namespace treeid
