#include "treeid/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <set>

#include <nlohmann/json.hpp>

#include "treeid/io.hpp"

namespace treeid {

using nlohmann::json;
namespace fs = std::filesystem;

extern const char* const kIeee39TreeJson;

TopologyMetrics compare_topologies(const UndirectedGraph& estimated, const UndirectedGraph& truth) {
  const std::set<std::string> a(estimated.nodes().begin(), estimated.nodes().end());
  const std::set<std::string> b(truth.nodes().begin(), truth.nodes().end());
  if (a != b) throw Error(ErrorCode::NodeSetMismatch, "estimated and true graphs have different nodes");

  const auto est = estimated.edges();
  const auto tru = truth.edges();
  std::vector<LabelEdge> common;
  std::set_intersection(est.begin(), est.end(), tru.begin(), tru.end(), std::back_inserter(common));
  const double tp = static_cast<double>(common.size());

  TopologyMetrics m;
  m.precision = est.empty() ? (tru.empty() ? 1.0 : 0.0) : tp / static_cast<double>(est.size());
  m.recall = tru.empty() ? 1.0 : tp / static_cast<double>(tru.size());
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.symmetric_difference = est.size() + tru.size() - 2 * common.size();
  m.exact_match = m.symmetric_difference == 0;
  return m;
}

GridNetworkModel ieee39_tree_case() { return io::model_from_json(json::parse(kIeee39TreeJson)); }

std::vector<LabelEdge> ieee39_removed_lines() {
  const auto doc = json::parse(kIeee39TreeJson);
  std::vector<LabelEdge> out;
  for (const auto& e : doc.at("removed_lines")) {
    out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
  }
  return out;
}

GridNetworkModel chain_case(std::size_t n, double dt) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a chain needs at least two nodes");
  auto labels = numbered_labels(n);
  std::vector<LabelEdge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(labels[i], labels[i + 1]);
  return GridNetworkModel::uniform(validate_tree(UndirectedGraph(labels, edges)), dt);
}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "stage " + stage + ": " + cause.what()), stage_(std::move(stage)) {}

namespace {

template <class F>
auto run_stage(const std::string& name, StageTimings* timings, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    if (timings) {
      const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
      timings->emplace_back(name, took.count());
    }
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record();
    } else {
      auto out = body();
      record();
      return out;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

std::string taper_name(Taper t) { return t == Taper::Hann ? "hann" : "rectangular"; }

std::string detrend_name(DetrendMode d) {
  switch (d) {
    case DetrendMode::None: return "none";
    case DetrendMode::Mean: return "mean";
    case DetrendMode::Difference: return "difference";
  }
  return "none";
}

std::string score_name(ScoreMethod s) {
  switch (s) {
    case ScoreMethod::Auto: return "auto";
    case ScoreMethod::Magnitude: return "magnitude";
    case ScoreMethod::Significance: return "significance";
  }
  return "auto";
}

template <class T>
T pick(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("config field '") + key + "': " + e.what());
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) {
    throw Error(ErrorCode::SchemaError, std::string("config field '") + key + "' must be an object");
  }
  return doc.at(key);
}

bool parse_count(std::string_view text, std::size_t& out) {
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && end == text.data() + text.size();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "config must be a JSON object");
  ExperimentConfig cfg;

  if (doc.contains("model")) {
    cfg.model = io::model_from_json(doc.at("model"));
  } else if (doc.contains("model_path")) {
    cfg.model = io::load_model(resolve(base_dir, pick<std::string>(doc, "model_path", "")));
  } else if (doc.contains("case")) {
    const auto name = pick<std::string>(doc, "case", "");
    if (name == "ieee39") {
      cfg.model = ieee39_tree_case();
    } else if (std::size_t n = 0; name.starts_with("chain:") && parse_count(name.substr(6), n)) {
      cfg.model = chain_case(n);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown case '" + name + "'; use ieee39 or chain:<n>");
    }
  }
  if (cfg.model && doc.contains("dt")) cfg.model->dt = pick<double>(doc, "dt", cfg.model->dt);
  if (doc.contains("truth_path")) {
    cfg.truth = io::load_graph(resolve(base_dir, pick<std::string>(doc, "truth_path", "")));
  }

  const json& sim = section(doc, "simulation");
  cfg.simulation.n_samples = pick<std::size_t>(sim, "n_samples", cfg.simulation.n_samples);
  cfg.simulation.burn_in = pick<std::size_t>(sim, "burn_in", cfg.simulation.burn_in);
  cfg.simulation.seed = pick<std::uint64_t>(sim, "seed", cfg.simulation.seed);

  cfg.skip_simulation = pick<bool>(doc, "skip_simulation", false);
  if (doc.contains("panel_path")) cfg.panel_path = resolve(base_dir, pick<std::string>(doc, "panel_path", ""));
  cfg.panel_dt = pick<double>(doc, "panel_dt", cfg.model ? cfg.model->dt : 1.0);

  const json& welch = section(doc, "welch");
  cfg.welch.window_len = pick<std::size_t>(welch, "window_len", cfg.welch.window_len);
  cfg.welch.overlap = pick<double>(welch, "overlap", cfg.welch.overlap);
  const auto taper = pick<std::string>(welch, "taper", "hann");
  if (taper == "hann") {
    cfg.welch.taper = Taper::Hann;
  } else if (taper == "rectangular") {
    cfg.welch.taper = Taper::Rectangular;
  } else {
    throw Error(ErrorCode::InvalidArgument, "taper must be hann or rectangular");
  }
  const auto detrend = pick<std::string>(welch, "detrend", "none");
  if (detrend == "none") {
    cfg.welch.detrend = DetrendMode::None;
  } else if (detrend == "mean") {
    cfg.welch.detrend = DetrendMode::Mean;
  } else if (detrend == "difference") {
    cfg.welch.detrend = DetrendMode::Difference;
  } else {
    throw Error(ErrorCode::InvalidArgument, "detrend must be none, mean or difference");
  }

  const json& wiener = section(doc, "wiener");
  if (wiener.contains("ridge") && !wiener.at("ridge").is_null()) {
    cfg.inference.ridge = pick<double>(wiener, "ridge", 0.0);
  }
  const auto score = pick<std::string>(wiener, "score", "auto");
  if (score == "auto") {
    cfg.inference.score = ScoreMethod::Auto;
  } else if (score == "magnitude") {
    cfg.inference.score = ScoreMethod::Magnitude;
  } else if (score == "significance") {
    cfg.inference.score = ScoreMethod::Significance;
  } else {
    throw Error(ErrorCode::InvalidArgument, "score must be auto, magnitude or significance");
  }
  cfg.inference.policy = ThresholdPolicy::parse(pick<std::string>(wiener, "policy", "auto"));
  cfg.inference.policy.alpha = pick<double>(wiener, "alpha", cfg.inference.policy.alpha);

  cfg.inference.mode = parse_prune_mode(pick<std::string>(section(doc, "prune"), "mode", "strict"));

  const json& outputs = section(doc, "outputs");
  cfg.write_panel = pick<bool>(outputs, "panel", false);
  cfg.write_field = pick<bool>(outputs, "field", false);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(io::read_json(path), path.parent_path());
}

json ExperimentConfig::to_json() const {
  json doc;
  if (model) doc["model"] = io::model_to_json(*model);
  if (truth) doc["truth"] = io::graph_to_json(*truth);
  doc["simulation"] = {{"n_samples", simulation.n_samples},
                       {"burn_in", simulation.burn_in},
                       {"seed", simulation.seed}};
  doc["skip_simulation"] = skip_simulation;
  if (!panel_path.empty()) doc["panel_path"] = panel_path.string();
  doc["panel_dt"] = panel_dt;
  doc["welch"] = {{"window_len", welch.window_len},
                  {"overlap", welch.overlap},
                  {"taper", taper_name(welch.taper)},
                  {"detrend", detrend_name(welch.detrend)}};
  doc["wiener"] = {{"ridge", inference.ridge ? json(*inference.ridge) : json(nullptr)},
                   {"score", score_name(inference.score)},
                   {"policy", inference.policy.to_string()},
                   {"alpha", inference.policy.alpha}};
  doc["prune"] = {{"mode", to_string(inference.mode)}};
  doc["outputs"] = {{"panel", write_panel}, {"field", write_field}};
  return doc;
}

void ExperimentConfig::validate() const {
  if (skip_simulation) {
    if (panel_path.empty()) {
      throw Error(ErrorCode::InvalidArgument, "skip_simulation requires panel_path");
    }
    if (!fs::exists(panel_path)) {
      throw Error(ErrorCode::IoError, "panel file " + panel_path.string() + " does not exist");
    }
  } else {
    if (!model) throw Error(ErrorCode::InvalidArgument, "config needs model, model_path or case");
    model->validate();
    if (simulation.n_samples < 4 * welch.window_len) {
      throw Error(ErrorCode::InvalidArgument, "n_samples must be at least 4 * window_len");
    }
    welch.validate(simulation.n_samples);
  }
}

FieldReconstruction reconstruct_from_field(const SpectralDensityField& field,
                                           const InferenceSettings& settings, StageTimings* timings) {
  const auto bank =
      run_stage("wiener", timings, [&] { return wiener_filters(field, settings.ridge); });
  FieldReconstruction out;
  out.scores = run_stage("scores", timings, [&] { return coupling_scores(bank, settings.score); });
  out.kin = run_stage("threshold", timings, [&] { return threshold_kin(out.scores, settings.policy); });
  out.reconstruction = run_stage("prune", timings, [&] {
    return reconstruct_tree(out.kin.graph, PruneOptions{settings.mode, &out.scores});
  });
  return out;
}

namespace {

ScoreSummary summarize(const FieldReconstruction& fr, const ThresholdPolicy& policy) {
  ScoreSummary s;
  s.kind = fr.scores.kind;
  s.policy = policy.to_string();
  s.rule = fr.kin.rule;
  s.threshold = fr.kin.threshold;
  const auto m = fr.scores.scores.rows();
  bool any_selected = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = fr.scores.scores(i, j);
      s.max_score = std::max(s.max_score, v);
      if (fr.kin.graph.adjacent(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        s.min_selected = any_selected ? std::min(s.min_selected, v) : v;
        any_selected = true;
      } else {
        s.max_rejected = std::max(s.max_rejected, v);
      }
    }
  }
  return s;
}

json edges_json(const std::vector<LabelEdge>& edges) {
  json out = json::array();
  for (const auto& [a, b] : edges) out.push_back({a, b});
  return out;
}

std::string kind_name(ScoreKind k) { return k == ScoreKind::Magnitude ? "magnitude" : "significance"; }

}  // namespace

json report_to_json(const ReconstructionReport& report, const ExperimentConfig& cfg) {
  json doc;
  if (report.truth) doc["true_edges"] = edges_json(report.truth->edges());
  doc["kin_edges"] = edges_json(report.kin.edges());
  doc["confirmed_edges"] = edges_json(report.confirmed);
  doc["final_edges"] = edges_json(report.tree.edges());
  if (report.metrics) {
    const auto& m = *report.metrics;
    doc["metrics"] = {{"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"exact_match", m.exact_match},
                      {"symmetric_difference", m.symmetric_difference}};
  }
  const auto& s = report.scores;
  doc["scores"] = {{"kind", kind_name(s.kind)},     {"policy", s.policy},
                   {"rule", s.rule},                {"threshold", s.threshold},
                   {"max_score", s.max_score},      {"min_selected", s.min_selected},
                   {"max_rejected", s.max_rejected}};
  json low = json::array();
  for (const auto& leaf : report.reconstruction.leaves) {
    if (leaf.low_confidence) low.push_back({leaf.kept.first, leaf.kept.second});
  }
  doc["low_confidence_edges"] = low;
  doc["warnings"] = report.reconstruction.warnings;
  json timings = json::object();
  for (const auto& [stage, seconds] : report.timings) timings[stage] = seconds;
  doc["timings_s"] = timings;
  doc["config"] = cfg.to_json();
  return doc;
}

ReconstructionReport run_pipeline(const ExperimentConfig& cfg) {
  const fs::path& dir = cfg.out_dir;
  ReconstructionReport report;
  try {
    run_stage("config", nullptr, [&] {
      cfg.validate();
      fs::create_directories(dir);
    });
    if (cfg.truth) {
      report.truth = cfg.truth;
    } else if (cfg.model && !cfg.skip_simulation) {
      report.truth = cfg.model->topology.graph();
    }

    SpectralDensityField field;
    if (cfg.skip_simulation) {
      const auto panel =
          run_stage("load", &report.timings, [&] { return io::load_panel(cfg.panel_path, cfg.panel_dt); });
      field = run_stage("spectral", &report.timings,
                        [&] { return welch_cross_psd(panel, cfg.welch); });
    } else {
      const auto dss = run_stage("discretize", &report.timings, [&] { return discretize_zoh(*cfg.model); });
      const bool stream = !cfg.write_panel && cfg.welch.detrend != DetrendMode::Mean;
      if (stream) {
        WelchAccumulator acc(cfg.model->labels(), cfg.welch);
        run_stage("simulate", &report.timings, [&] {
          simulate_stream(dss, cfg.model->noise, cfg.simulation,
                          [&](std::span<const double> y) { acc.push(y); });
        });
        field = run_stage("spectral", &report.timings, [&] { return acc.finish(); });
      } else {
        const auto panel = run_stage("simulate", &report.timings, [&] {
          return simulate(dss, cfg.model->noise, cfg.simulation, cfg.model->labels());
        });
        if (cfg.write_panel) {
          run_stage("write", nullptr, [&] { io::save_panel(dir / "panel.bin", panel); });
        }
        field = run_stage("spectral", &report.timings,
                          [&] { return welch_cross_psd(panel, cfg.welch); });
      }
    }
    if (cfg.write_field) {
      run_stage("write", nullptr, [&] { io::save_field(dir / "field.json", field); });
    }

    auto fr = reconstruct_from_field(field, cfg.inference, &report.timings);
    run_stage("write", nullptr, [&] {
      io::save_scores_csv(dir / "scores.csv", fr.scores);
      io::save_graph(dir / "kin.json", fr.kin.graph);
    });
    report.kin = fr.kin.graph;
    report.scores = summarize(fr, cfg.inference.policy);
    report.confirmed = fr.reconstruction.outcome.confirmed;
    report.tree = fr.reconstruction.tree;
    report.reconstruction = std::move(fr.reconstruction);
    run_stage("write", nullptr, [&] {
      io::save_graph(dir / "tree.json", report.tree);
      io::write_json(dir / "provenance.json", io::provenance_to_json(report.reconstruction));
    });

    if (report.truth) {
      report.metrics = run_stage("evaluate", &report.timings,
                                 [&] { return compare_topologies(report.tree, *report.truth); });
    }
    run_stage("write", nullptr,
              [&] { io::write_json(dir / "report.json", report_to_json(report, cfg)); });
  } catch (const StageError& e) {
    if (e.stage() != "config") {
      try {
        io::write_json(dir / "error.json",
                       {{"stage", e.stage()}, {"code", to_string(e.code())}, {"message", e.what()}});
      } catch (const Error&) {
      }
    }
    throw;
  }
  return report;
}

}  // namespace treeid
