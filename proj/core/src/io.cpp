#include "treeid/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <complex>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "treeid/error.hpp"

namespace treeid::io {

using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ostream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

const json& field(const json& doc, const char* name, const char* what) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw Error(ErrorCode::SchemaError, std::string(what) + ": missing field '" + name + "'");
  }
  return doc.at(name);
}

template <class T>
T get_as(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, where + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

fs::path sidecar_for(const fs::path& path) { return fs::path(path.string() + ".json"); }

}  // namespace

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  check_written(out, path);
}

json graph_to_json(const UndirectedGraph& g) {
  json edges = json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  return {{"nodes", g.nodes()}, {"edges", edges}};
}

UndirectedGraph graph_from_json(const json& doc) {
  auto nodes = get_as<std::vector<std::string>>(field(doc, "nodes", "graph"), "graph.nodes");
  const json& raw = field(doc, "edges", "graph");
  if (!raw.is_array()) throw Error(ErrorCode::SchemaError, "graph.edges must be an array");
  std::vector<LabelEdge> edges;
  for (const auto& e : raw) {
    auto pair = get_as<std::vector<std::string>>(e, "graph.edges entry");
    if (pair.size() != 2) {
      throw Error(ErrorCode::SchemaError, "graph.edges entries must be [a, b] pairs");
    }
    edges.emplace_back(pair[0], pair[1]);
  }
  return UndirectedGraph(std::move(nodes), edges);
}

UndirectedGraph load_graph(const fs::path& path) { return graph_from_json(read_json(path)); }

void save_graph(const fs::path& path, const UndirectedGraph& g) { write_json(path, graph_to_json(g)); }

PanelFormat panel_format_for(const fs::path& path) {
  return path.extension() == ".bin" ? PanelFormat::Binary : PanelFormat::Csv;
}

void save_panel_csv(const fs::path& path, const TimeSeriesPanel& panel) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < panel.labels.size(); ++i) {
    out << (i ? "," : "") << panel.labels[i];
  }
  out << '\n';
  std::string row;
  for (Eigen::Index k = 0; k < panel.samples.cols(); ++k) {
    row.clear();
    for (Eigen::Index i = 0; i < panel.samples.rows(); ++i) {
      if (i) row += ',';
      row += format_double(panel.samples(i, k));
    }
    out << row << '\n';
  }
  check_written(out, path);
}

TimeSeriesPanel load_panel_csv(const fs::path& path, double dt) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header row");
  TimeSeriesPanel panel;
  panel.labels = split_csv(line);
  panel.dt = dt;
  const std::size_t m = panel.labels.size();
  if (m == 0 || std::any_of(panel.labels.begin(), panel.labels.end(),
                            [](const std::string& s) { return s.empty(); })) {
    throw ParseError(path.string(), 1, "empty node label in header");
  }

  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != m) {
      throw ParseError(path.string(), row,
                       "expected " + std::to_string(m) + " columns, found " +
                           std::to_string(cells.size()));
    }
    for (const auto& c : cells) {
      double v = 0.0;
      if (!parse_double(c, v)) throw ParseError(path.string(), row, "not a number: '" + c + "'");
      values.push_back(v);
    }
  }
  const auto n = static_cast<Eigen::Index>(values.size() / m);
  panel.samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::ColMajor>>(values.data(),
                                                                   static_cast<Eigen::Index>(m), n);
  panel.validate();
  return panel;
}

void save_panel_binary(const fs::path& path, const TimeSeriesPanel& panel) {
  auto out = open_out(path, std::ios::binary);
  std::vector<double> buf(panel.node_count());
  for (Eigen::Index k = 0; k < panel.samples.cols(); ++k) {
    for (Eigen::Index i = 0; i < panel.samples.rows(); ++i) {
      buf[static_cast<std::size_t>(i)] = to_little(panel.samples(i, k));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  check_written(out, path);
  write_json(sidecar_for(path), {{"labels", panel.labels},
                                 {"n_samples", panel.sample_count()},
                                 {"dt", panel.dt},
                                 {"burn_in_discarded", panel.burn_in_discarded}});
}

TimeSeriesPanel load_panel_binary(const fs::path& path) {
  const json meta = read_json(sidecar_for(path));
  TimeSeriesPanel panel;
  panel.labels = get_as<std::vector<std::string>>(field(meta, "labels", "panel sidecar"), "labels");
  const auto n = get_as<std::size_t>(field(meta, "n_samples", "panel sidecar"), "n_samples");
  panel.dt = get_as<double>(field(meta, "dt", "panel sidecar"), "dt");
  if (meta.contains("burn_in_discarded")) {
    panel.burn_in_discarded = get_as<std::size_t>(meta.at("burn_in_discarded"), "burn_in_discarded");
  }
  const std::size_t m = panel.labels.size();

  auto in = open_in(path, std::ios::binary);
  std::vector<double> data(m * n);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(double) ||
      in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string(), 0,
                     "binary size does not match " + std::to_string(m) + " x " + std::to_string(n));
  }
  for (auto& v : data) v = to_little(v);
  panel.samples = Eigen::Map<const Eigen::MatrixXd>(data.data(), static_cast<Eigen::Index>(m),
                                                    static_cast<Eigen::Index>(n));
  panel.validate();
  return panel;
}

void save_panel(const fs::path& path, const TimeSeriesPanel& panel) {
  if (panel_format_for(path) == PanelFormat::Binary) {
    save_panel_binary(path, panel);
  } else {
    save_panel_csv(path, panel);
  }
}

TimeSeriesPanel load_panel(const fs::path& path, double csv_dt) {
  return panel_format_for(path) == PanelFormat::Binary ? load_panel_binary(path)
                                                       : load_panel_csv(path, csv_dt);
}

void save_field(const fs::path& header, const SpectralDensityField& field_) {
  fs::path data = header;
  data.replace_extension(".bin");
  auto out = open_out(data, std::ios::binary);
  for (const auto& mat : field_.matrices) {
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      for (Eigen::Index k = 0; k < mat.cols(); ++k) {
        const float pair[2] = {to_little(static_cast<float>(mat(i, k).real())),
                               to_little(static_cast<float>(mat(i, k).imag()))};
        out.write(reinterpret_cast<const char*>(pair), sizeof pair);
      }
    }
  }
  check_written(out, data);
  write_json(header, {{"labels", field_.labels},
                      {"grid", field_.grid},
                      {"equivalent_segments", field_.equivalent_segments},
                      {"bin_correlation", field_.bin_correlation},
                      {"data", data.filename().string()}});
}

SpectralDensityField load_field(const fs::path& header) {
  const json doc = read_json(header);
  auto labels = get_as<std::vector<std::string>>(field(doc, "labels", "field"), "labels");
  auto grid = get_as<std::vector<double>>(field(doc, "grid", "field"), "grid");
  const auto name = get_as<std::string>(field(doc, "data", "field"), "data");
  const double k_eff = doc.contains("equivalent_segments")
                           ? get_as<double>(doc.at("equivalent_segments"), "equivalent_segments")
                           : 0.0;
  const double kappa =
      doc.contains("bin_correlation") ? get_as<double>(doc.at("bin_correlation"), "bin_correlation") : 1.0;

  const auto m = static_cast<Eigen::Index>(labels.size());
  const fs::path data = header.parent_path() / name;
  auto in = open_in(data, std::ios::binary);
  std::vector<Eigen::MatrixXcd> mats;
  mats.reserve(grid.size());
  std::vector<float> buf(static_cast<std::size_t>(2 * m * m));
  for (std::size_t f = 0; f < grid.size(); ++f) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) {
      throw ParseError(data.string(), 0, "truncated at bin " + std::to_string(f));
    }
    Eigen::MatrixXcd mat(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto at = static_cast<std::size_t>(2 * (i * m + k));
        mat(i, k) = {to_little(buf[at]), to_little(buf[at + 1])};
      }
    }
    mats.push_back(std::move(mat));
  }
  return SpectralDensityField::make(std::move(labels), std::move(grid), std::move(mats), k_eff, kappa);
}

json model_to_json(const GridNetworkModel& model) {
  const auto& g = model.topology.graph();
  json edges = json::array();
  const auto& idx = g.index_edges();
  for (std::size_t e = 0; e < idx.size(); ++e) {
    edges.push_back({{"a", g.label(idx[e].u)}, {"b", g.label(idx[e].v)}, {"susceptance", model.susceptance[e]}});
  }
  json inertia = json::object(), damping = json::object(), noise = json::object();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    inertia[g.label(i)] = model.inertia[i];
    damping[g.label(i)] = model.damping[i];
    noise[g.label(i)] = {{"sigma", model.noise.sigma[i]}, {"ar", model.noise.ar[i]}};
  }
  return {{"nodes", g.nodes()}, {"edges", edges},       {"inertia", inertia},
          {"damping", damping}, {"grounding", model.grounding}, {"noise", noise},
          {"dt", model.dt},     {"generators", model.generators}};
}

GridNetworkModel model_from_json(const json& doc) {
  auto nodes = get_as<std::vector<std::string>>(field(doc, "nodes", "model"), "model.nodes");
  const json& raw = field(doc, "edges", "model");
  if (!raw.is_array()) throw Error(ErrorCode::SchemaError, "model.edges must be an array");
  std::vector<LabelEdge> edges;
  std::vector<double> weights;
  for (const auto& e : raw) {
    edges.emplace_back(get_as<std::string>(field(e, "a", "model.edges entry"), "a"),
                       get_as<std::string>(field(e, "b", "model.edges entry"), "b"));
    weights.push_back(e.contains("susceptance") ? get_as<double>(e.at("susceptance"), "susceptance") : 1.0);
  }
  UndirectedGraph g(nodes, edges);
  GridNetworkModel model;
  model.topology = validate_tree(g);

  // Susceptances are stored in index-edge order.
  const auto& graph = model.topology.graph();
  model.susceptance.assign(graph.edge_count(), 1.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const IndexEdge key(graph.index_of(edges[e].first), graph.index_of(edges[e].second));
    const auto& idx = graph.index_edges();
    const auto pos = std::lower_bound(idx.begin(), idx.end(), key) - idx.begin();
    model.susceptance[static_cast<std::size_t>(pos)] = weights[e];
  }

  const std::size_t m = graph.node_count();
  auto per_node = [&](const char* name, double fallback) {
    std::vector<double> out(m, fallback);
    if (!doc.contains(name)) return out;
    const json& table = doc.at(name);
    if (!table.is_object()) throw Error(ErrorCode::SchemaError, std::string("model.") + name + " must be an object");
    for (const auto& [label, value] : table.items()) {
      out[graph.index_of(label)] = get_as<double>(value, std::string("model.") + name + "." + label);
    }
    return out;
  };
  model.inertia = per_node("inertia", 1.0);
  model.damping = per_node("damping", 1.0);
  model.noise = NoiseSpec::white(m, 1.0);
  if (doc.contains("noise")) {
    const json& table = doc.at("noise");
    if (!table.is_object()) throw Error(ErrorCode::SchemaError, "model.noise must be an object");
    for (const auto& [label, spec] : table.items()) {
      const auto i = graph.index_of(label);
      if (spec.contains("sigma")) model.noise.sigma[i] = get_as<double>(spec.at("sigma"), "noise.sigma");
      if (spec.contains("ar")) model.noise.ar[i] = get_as<double>(spec.at("ar"), "noise.ar");
    }
  }
  model.grounding = doc.contains("grounding") ? get_as<double>(doc.at("grounding"), "model.grounding")
                                              : default_grounding(model.susceptance);
  if (doc.contains("dt")) model.dt = get_as<double>(doc.at("dt"), "model.dt");
  if (doc.contains("generators")) {
    model.generators = get_as<std::vector<std::string>>(doc.at("generators"), "model.generators");
    for (const auto& gname : model.generators) graph.index_of(gname);
  }
  model.validate();
  return model;
}

GridNetworkModel load_model(const fs::path& path) { return model_from_json(read_json(path)); }

void save_model(const fs::path& path, const GridNetworkModel& model) {
  write_json(path, model_to_json(model));
}

void save_scores_csv(const fs::path& path, const CouplingScores& scores) {
  auto out = open_out(path);
  out << "node";
  for (const auto& l : scores.labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < scores.scores.rows(); ++i) {
    out << scores.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < scores.scores.cols(); ++j) out << ',' << format_double(scores.scores(i, j));
    out << '\n';
  }
  check_written(out, path);
}

json provenance_to_json(const Reconstruction& rec) {
  json records = json::array();
  for (const auto& d : rec.outcome.decisions) {
    json witness = json::array();
    for (const auto& s : d.witness) witness.push_back(s);
    records.push_back({{"edge", {d.edge.first, d.edge.second}},
                       {"stage", d.stage},
                       {"rule", d.rule},
                       {"verdict", d.verdict},
                       {"witness", witness},
                       {"low_confidence", d.low_confidence}});
  }
  return {{"v_nl", rec.outcome.v_nl},
          {"v_l", rec.outcome.v_l},
          {"decisions", records},
          {"warnings", rec.warnings}};
}

}  // namespace treeid::io
