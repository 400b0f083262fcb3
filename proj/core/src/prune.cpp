#include "treeid/prune.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "treeid/error.hpp"

namespace treeid {

PruneMode parse_prune_mode(std::string_view text) {
  if (text == "strict") return PruneMode::Strict;
  if (text == "robust") return PruneMode::Robust;
  throw Error(ErrorCode::InvalidArgument, "prune mode must be strict or robust, got '" + std::string(text) + "'");
}

std::string to_string(PruneMode mode) { return mode == PruneMode::Strict ? "strict" : "robust"; }

std::string to_string(LeafRule rule) {
  switch (rule) {
    case LeafRule::Card1: return "card1";
    case LeafRule::Card2: return "card2";
    case LeafRule::Card3Plus: return "card3+";
  }
  return "card1";
}

namespace {

LabelEdge ordered(const std::string& a, const std::string& b) {
  return a < b ? LabelEdge{a, b} : LabelEdge{b, a};
}

NodeSet labels_of(const UndirectedGraph& g, const std::vector<std::size_t>& idx) {
  NodeSet out;
  for (auto i : idx) out.insert(g.label(i));
  return out;
}

std::vector<char> mask_of(const UndirectedGraph& g, const NodeSet& nodes) {
  std::vector<char> mask(g.node_count(), 0);
  for (const auto& n : nodes) mask[g.index_of(n)] = 1;
  return mask;
}

bool backbone_connected(const UndirectedGraph& kin, const std::vector<char>& nonleaf,
                        const std::vector<IndexEdge>& confirmed) {
  const auto backbone = UndirectedGraph::from_index_edges(kin.nodes(), confirmed);
  std::vector<char> removed(kin.node_count());
  for (std::size_t i = 0; i < removed.size(); ++i) removed[i] = nonleaf[i] ? 0 : 1;
  return components_without(backbone, removed).size() == 1;
}

}  // namespace

PruneOutcome prune_nonleaf(const UndirectedGraph& kin) {
  const std::size_t m = kin.node_count();
  if (m < 5) {
    throw Error(ErrorCode::AssumptionViolated,
                "kin graph has " + std::to_string(m) + " nodes; at least 5 are required");
  }

  // Lexicographic label order for a reproducible provenance log.
  std::vector<IndexEdge> order = kin.index_edges();
  std::sort(order.begin(), order.end(), [&](const IndexEdge& x, const IndexEdge& y) {
    return ordered(kin.label(x.u), kin.label(x.v)) < ordered(kin.label(y.u), kin.label(y.v));
  });

  PruneOutcome out;
  std::vector<char> nonleaf(m, 0);
  std::vector<char> removed(m, 0);
  std::vector<IndexEdge> confirmed;
  std::vector<char> is_confirmed(order.size(), 0);
  std::vector<std::vector<NodeSet>> witnesses(order.size());

  for (std::size_t e = 0; e < order.size(); ++e) {
    const auto [u, v] = order[e];
    removed[u] = removed[v] = 1;
    const auto comps = components_without(kin, removed);
    removed[u] = removed[v] = 0;
    for (const auto& c : comps) witnesses[e].push_back(labels_of(kin, c));
    if (comps.size() > 1) {
      confirmed.push_back(order[e]);
      is_confirmed[e] = 1;
      nonleaf[u] = nonleaf[v] = 1;
    }
  }

  if (confirmed.empty()) {
    throw Error(ErrorCode::AssumptionViolated,
                "no kin edge separates the graph; input is not the kin graph of a tree with "
                "diameter at least 4");
  }
  if (!backbone_connected(kin, nonleaf, confirmed)) {
    throw Error(ErrorCode::AssumptionViolated, "confirmed edges do not form a connected backbone");
  }

  std::vector<IndexEdge> kept = confirmed;
  for (std::size_t e = 0; e < order.size(); ++e) {
    const auto [u, v] = order[e];
    const LabelEdge edge = ordered(kin.label(u), kin.label(v));
    EdgeDecision d{edge, "nonleaf", "separation", "", std::move(witnesses[e]), false};
    if (is_confirmed[e]) {
      d.verdict = "confirmed";
      out.confirmed.push_back(edge);
    } else if (nonleaf[u] && nonleaf[v]) {
      d.verdict = "dropped";
      out.dropped_nonleaf_pairs.push_back(edge);
    } else if (!nonleaf[u] && !nonleaf[v]) {
      d.rule = "leaf-leaf";
      d.verdict = "dropped";
      out.dropped_leaf_pairs.push_back(edge);
    } else {
      d.verdict = "candidate";
      kept.push_back(order[e]);
    }
    out.decisions.push_back(std::move(d));
  }

  for (std::size_t i = 0; i < m; ++i) (nonleaf[i] ? out.v_nl : out.v_l).insert(kin.label(i));
  out.t_bar = UndirectedGraph::from_index_edges(kin.nodes(), kept);
  return out;
}

namespace {

struct Picked {
  std::size_t parent;
  bool low_confidence;
};

double score_of(const PruneOptions& options, const UndirectedGraph& g, std::size_t a,
                std::size_t b) {
  return options.scores->at(g.label(a), g.label(b));
}

Picked break_tie(const UndirectedGraph& g, std::size_t leaf, const std::vector<std::size_t>& pool,
                 const PruneOptions& options, const std::string& detail) {
  if (options.mode == PruneMode::Strict || options.scores == nullptr || pool.empty()) {
    throw AmbiguousError(g.label(leaf), detail);
  }
  std::size_t best = pool.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (auto b : pool) {
    const double s = score_of(options, g, leaf, b);
    if (s > best_score) {
      best_score = s;
      best = b;
    }
  }
  return {best, true};
}

std::string join(const UndirectedGraph& g, const std::vector<std::size_t>& idx) {
  std::string out = "{";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out += ", ";
    out += g.label(idx[k]);
  }
  return out + "}";
}

}  // namespace

LeafResolution resolve_leaf(const UndirectedGraph& t_bar, const std::string& leaf,
                            const NodeSet& v_nl, const PruneOptions& options) {
  const std::size_t li = t_bar.index_of(leaf);
  if (v_nl.contains(leaf)) {
    throw Error(ErrorCode::AssumptionViolated, "node " + leaf + " is not a leaf");
  }
  const std::vector<char> nonleaf = mask_of(t_bar, v_nl);
  const auto& kin = t_bar.neighbors(li);
  if (kin.empty()) {
    throw Error(ErrorCode::AssumptionViolated, "leaf " + leaf + " has no non-leaf kin");
  }
  for (auto k : kin) {
    if (!nonleaf[k]) {
      throw Error(ErrorCode::AssumptionViolated,
                  "leaf " + leaf + " is adjacent to leaf " + t_bar.label(k));
    }
  }

  LeafResolution res;
  res.leaf = leaf;
  res.kin_set = labels_of(t_bar, kin);
  Picked pick{kin.front(), false};

  if (kin.size() == 1) {
    res.rule = LeafRule::Card1;
  } else if (kin.size() == 2) {
    res.rule = LeafRule::Card2;
    std::vector<std::size_t> passing;
    for (std::size_t h = 0; h < 2; ++h) {
      const std::size_t parent = kin[h];
      const std::size_t other = kin[1 - h];
      const IndexEdge cut(li, other);
      const auto reduced = t_bar.without_edges(std::span<const IndexEdge>(&cut, 1));
      std::vector<std::size_t> two;
      for (auto x : two_hop_indices(reduced, li)) {
        if (nonleaf[x]) two.push_back(x);
      }
      res.witness.push_back(labels_of(t_bar, two));
      if (two.size() == 1 && two.front() == other) passing.push_back(parent);
    }
    if (passing.size() == 1) {
      pick = {passing.front(), false};
    } else {
      pick = break_tie(t_bar, li, kin, options,
                       std::to_string(passing.size()) + " of 2 parent hypotheses pass among " +
                           join(t_bar, kin));
    }
  } else {
    res.rule = LeafRule::Card3Plus;
    std::vector<std::size_t> common;
    for (auto b : kin) {
      const bool all = std::all_of(kin.begin(), kin.end(),
                                   [&](std::size_t x) { return x == b || t_bar.adjacent(b, x); });
      if (all) common.push_back(b);  // b is adjacent to the leaf by construction
    }
    res.witness.push_back(labels_of(t_bar, common));
    if (common.size() == 1) {
      pick = {common.front(), false};
    } else {
      pick = break_tie(t_bar, li, common.empty() ? kin : common, options,
                       std::to_string(common.size()) + " common non-leaf neighbors among " +
                           join(t_bar, kin));
    }
  }

  res.low_confidence = pick.low_confidence;
  res.kept = ordered(leaf, t_bar.label(pick.parent));
  for (auto k : kin) {
    if (k != pick.parent) res.removed.push_back(ordered(leaf, t_bar.label(k)));
  }
  std::sort(res.removed.begin(), res.removed.end());
  return res;
}

LeafPruning prune_leaf(const PruneOutcome& outcome, const PruneOptions& options) {
  LeafPruning out;
  std::vector<LabelEdge> edges = outcome.confirmed;
  for (const auto& leaf : outcome.v_l) {
    auto res = resolve_leaf(outcome.t_bar, leaf, outcome.v_nl, options);
    edges.push_back(res.kept);
    out.resolutions.push_back(std::move(res));
  }
  std::sort(edges.begin(), edges.end());
  out.tree = UndirectedGraph(outcome.t_bar.nodes(), edges);
  return out;
}

namespace {

void record_leaf_decisions(PruneOutcome& outcome, const std::vector<LeafResolution>& leaves) {
  for (const auto& r : leaves) {
    const std::string rule = to_string(r.rule);
    outcome.decisions.push_back({r.kept, "leaf", rule, "kept", r.witness, r.low_confidence});
    for (const auto& e : r.removed) {
      outcome.decisions.push_back({e, "leaf", rule, "removed", r.witness, r.low_confidence});
    }
  }
}

}  // namespace

Reconstruction reconstruct_tree(const UndirectedGraph& kin, const PruneOptions& options) {
  Reconstruction rec;
  rec.outcome = prune_nonleaf(kin);
  auto leaves = prune_leaf(rec.outcome, options);
  rec.tree = std::move(leaves.tree);
  rec.leaves = std::move(leaves.resolutions);
  record_leaf_decisions(rec.outcome, rec.leaves);

  const bool robust = options.mode == PruneMode::Robust;
  std::optional<TreeTopology> tree;
  try {
    tree = validate_tree(rec.tree);
  } catch (const Error& e) {
    if (!robust) {
      throw Error(ErrorCode::AssumptionViolated, std::string("reconstruction is not a tree: ") + e.what());
    }
    rec.warnings.push_back(std::string("reconstruction is not a tree: ") + e.what());
  }
  if (tree && !(kin_graph_oracle(*tree) == kin)) {
    const std::string msg =
        "input is not the kin graph of the reconstructed tree; its structure was not realizable";
    if (!robust) throw Error(ErrorCode::AssumptionViolated, msg);
    rec.warnings.push_back(msg);
  }
  return rec;
}

}  // namespace treeid
