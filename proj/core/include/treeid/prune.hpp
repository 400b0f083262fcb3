#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "treeid/graph.hpp"
#include "treeid/wiener.hpp"

namespace treeid {

enum class PruneMode {
  /// Any inconsistency raises.
  Strict,
  /// Ambiguous leaves are settled by the larger coupling score and flagged.
  Robust,
};

/// "strict" or "robust". Throws InvalidArgument.
PruneMode parse_prune_mode(std::string_view text);
std::string to_string(PruneMode mode);

struct PruneOptions {
  PruneMode mode = PruneMode::Strict;
  /// Needed for tie-breaking in robust mode; may be null otherwise.
  const CouplingScores* scores = nullptr;
};

/// One provenance entry per kin edge and per leaf decision.
struct EdgeDecision {
  LabelEdge edge;
  std::string stage;    // "nonleaf" | "leaf"
  std::string rule;     // "separation" | "leaf-leaf" | "card1" | "card2" | "card3+"
  std::string verdict;  // "confirmed" | "dropped" | "candidate" | "kept" | "removed"
  /// Components left after deleting the edge's endpoints, or the two-hop
  /// sets / common-neighbor candidates behind a leaf decision.
  std::vector<NodeSet> witness;
  bool low_confidence = false;
};

struct PruneOutcome {
  UndirectedGraph t_bar;
  NodeSet v_nl;
  NodeSet v_l;
  std::vector<LabelEdge> confirmed;
  std::vector<LabelEdge> dropped_nonleaf_pairs;
  std::vector<LabelEdge> dropped_leaf_pairs;
  std::vector<EdgeDecision> decisions;
};

enum class LeafRule { Card1, Card2, Card3Plus };

std::string to_string(LeafRule rule);

struct LeafResolution {
  std::string leaf;
  /// Non-leaf kins of the leaf: its neighbors in t_bar.
  NodeSet kin_set;
  LabelEdge kept;
  std::vector<LabelEdge> removed;
  LeafRule rule = LeafRule::Card1;
  bool low_confidence = false;
  std::vector<NodeSet> witness;
};

/// Keeps every kin edge whose endpoints separate the kin graph, classifies the
/// endpoints of kept edges as non-leaves, and retains leaf to non-leaf edges.
/// Throws AssumptionViolated when fewer than five nodes are given, no edge
/// separates, or the confirmed edges do not form one connected backbone.
PruneOutcome prune_nonleaf(const UndirectedGraph& kin);

/// Picks the unique parent of a leaf among its t_bar neighbors. Throws
/// AmbiguousError (strict mode) when the two-hop or common-neighbor test does
/// not single out one parent, and AssumptionViolated on malformed input.
LeafResolution resolve_leaf(const UndirectedGraph& t_bar, const std::string& leaf,
                            const NodeSet& v_nl, const PruneOptions& options = {});

struct LeafPruning {
  UndirectedGraph tree;
  std::vector<LeafResolution> resolutions;
};

/// Resolves every leaf; the result holds the confirmed edges plus one edge per leaf.
LeafPruning prune_leaf(const PruneOutcome& outcome, const PruneOptions& options = {});

struct Reconstruction {
  UndirectedGraph tree;
  PruneOutcome outcome;
  std::vector<LeafResolution> leaves;
  /// Robust-mode notes about inconsistencies that were tolerated.
  std::vector<std::string> warnings;
};

/// prune_leaf(prune_nonleaf(kin)) followed by two consistency checks: the
/// result must be a tree, and its own kin graph must reproduce the input
/// (strict mode raises AssumptionViolated; robust mode records a warning).
Reconstruction reconstruct_tree(const UndirectedGraph& kin, const PruneOptions& options = {});

}  // namespace treeid
