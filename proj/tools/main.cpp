#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "treeid/error.hpp"
#include "treeid/graph.hpp"
#include "treeid/harness.hpp"
#include "treeid/io.hpp"
#include "treeid/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace treeid;

namespace {

constexpr int kStageFailure = 1;
constexpr int kConfigFailure = 2;

void emit(const json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    io::write_json(out, doc);
  }
}

json metrics_json(const TopologyMetrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"exact_match", m.exact_match},
          {"symmetric_difference", m.symmetric_difference}};
}

Taper parse_taper(const std::string& s) {
  if (s == "hann") return Taper::Hann;
  if (s == "rectangular") return Taper::Rectangular;
  throw Error(ErrorCode::InvalidArgument, "unknown taper '" + s + "'");
}

DetrendMode parse_detrend(const std::string& s) {
  if (s == "none") return DetrendMode::None;
  if (s == "mean") return DetrendMode::Mean;
  if (s == "difference") return DetrendMode::Difference;
  throw Error(ErrorCode::InvalidArgument, "unknown detrend mode '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree topology identification from nodal time series"};
  app.require_subcommand(1);

  std::size_t nodes = 10, min_diameter = 4;
  std::uint64_t seed = 0;
  std::string out;
  auto* gen = app.add_subcommand("gen-tree", "Random labelled tree as graph JSON");
  gen->add_option("--nodes", nodes, "Node count")->required();
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--min-diameter", min_diameter, "Resample until the diameter reaches this");
  gen->add_option("--out", out, "Output path (stdout when omitted)");

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Simulate a panel from an experiment config");
  sim->add_option("--config", config, "Experiment config JSON")->required();
  sim->add_option("--out", out, "Panel path (.csv or .bin)")->required();

  std::string panel_path;
  WelchConfig welch;
  std::string taper = "hann", detrend = "none";
  double panel_dt = 1.0;
  auto* psd = app.add_subcommand("psd", "Welch cross-spectral density of a panel");
  psd->add_option("--panel", panel_path, "Panel path (.csv or .bin)")->required();
  psd->add_option("--window", welch.window_len, "Segment length (power of two)");
  psd->add_option("--overlap", welch.overlap, "Segment overlap fraction");
  psd->add_option("--taper", taper, "hann or rectangular");
  psd->add_option("--detrend", detrend, "none, mean or difference");
  psd->add_option("--dt", panel_dt, "Sampling interval for CSV panels");
  psd->add_option("--out", out, "Field header path (.json)")->required();

  std::string field_path, policy = "auto", mode = "strict", provenance;
  std::optional<double> ridge;
  auto* rec = app.add_subcommand("reconstruct", "Kin graph and tree from a spectral field");
  rec->add_option("--psd", field_path, "Field header written by psd")->required();
  rec->add_option("--policy", policy, "auto, gap or fixed:<tau>");
  rec->add_option("--mode", mode, "strict or robust");
  rec->add_option("--ridge", ridge, "Diagonal loading (default scales with the trace)");
  rec->add_option("--provenance", provenance, "Write per-edge decisions here");
  rec->add_option("--out", out, "Tree graph path (stdout when omitted)");

  std::string out_dir;
  auto* pipe = app.add_subcommand("pipeline", "Simulate or load, estimate, reconstruct and evaluate");
  pipe->add_option("--config", config, "Experiment config JSON")->required();
  pipe->add_option("--out-dir", out_dir, "Output directory (overrides the config)");

  std::string estimated, truth;
  auto* eval = app.add_subcommand("eval", "Compare an estimated graph with the truth");
  eval->add_option("--estimated", estimated, "Estimated graph JSON")->required();
  eval->add_option("--truth", truth, "True graph JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*gen) {
      const auto tree = random_tree(nodes, seed, min_diameter);
      emit(io::graph_to_json(tree.graph()), out);
    } else if (*sim) {
      const auto cfg = ExperimentConfig::load(config);
      cfg.validate();
      if (!cfg.model) throw Error(ErrorCode::InvalidArgument, "simulate needs a model in the config");
      const auto panel = simulate(discretize_zoh(*cfg.model), cfg.model->noise, cfg.simulation, cfg.model->labels());
      io::save_panel(out, panel);
    } else if (*psd) {
      welch.taper = parse_taper(taper);
      welch.detrend = parse_detrend(detrend);
      const auto panel = io::load_panel(panel_path, panel_dt);
      io::save_field(out, welch_cross_psd(panel, welch));
    } else if (*rec) {
      InferenceSettings settings;
      settings.ridge = ridge;
      settings.policy = ThresholdPolicy::parse(policy);
      settings.mode = parse_prune_mode(mode);
      const auto result = reconstruct_from_field(io::load_field(field_path), settings);
      if (!provenance.empty()) io::write_json(provenance, io::provenance_to_json(result.reconstruction));
      for (const auto& w : result.reconstruction.warnings) std::cerr << "warning: " << w << "\n";
      emit(io::graph_to_json(result.reconstruction.tree), out);
    } else if (*pipe) {
      auto cfg = ExperimentConfig::load(config);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const auto report = run_pipeline(cfg);
      json summary = {{"out_dir", cfg.out_dir.string()}, {"tree_edges", report.tree.edge_count()}};
      if (report.metrics) summary["metrics"] = metrics_json(*report.metrics);
      std::cout << summary.dump(2) << "\n";
    } else if (*eval) {
      const auto m = compare_topologies(io::load_graph(estimated), io::load_graph(truth));
      std::cout << metrics_json(m).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_config_error() ? kConfigFailure : kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return 0;
}
