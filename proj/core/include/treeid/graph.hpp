#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace treeid {

using NodeSet = std::set<std::string>;
using LabelEdge = std::pair<std::string, std::string>;

/// Edge between node indices, always stored with u < v.
struct IndexEdge {
  std::size_t u = 0;
  std::size_t v = 0;

  IndexEdge() = default;
  IndexEdge(std::size_t a, std::size_t b) : u(a < b ? a : b), v(a < b ? b : a) {}

  friend auto operator<=>(const IndexEdge&, const IndexEdge&) = default;
};

/// Simple undirected graph over string-labelled nodes. Node order is the
/// order given at construction and is what every index-based accessor uses.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  /// Throws SchemaError on duplicate nodes, self-loops or duplicate edges and
  /// UnknownNode when an edge endpoint is not declared.
  UndirectedGraph(std::vector<std::string> nodes, const std::vector<LabelEdge>& edges);

  static UndirectedGraph from_index_edges(std::vector<std::string> nodes,
                                          std::span<const IndexEdge> edges);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::string& label(std::size_t i) const { return nodes_.at(i); }

  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws UnknownNode.
  std::size_t index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label).has_value(); }

  bool adjacent(std::size_t i, std::size_t j) const;
  bool has_edge(std::string_view a, std::string_view b) const;

  /// Sorted neighbor indices of node i.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adj_.at(i); }
  std::size_t degree(std::size_t i) const { return adj_.at(i).size(); }
  NodeSet neighbor_labels(std::string_view label) const;

  /// Edges sorted by (u, v) index.
  const std::vector<IndexEdge>& index_edges() const noexcept { return edges_; }

  /// Edges as (smaller label, larger label) pairs in lexicographic order.
  std::vector<LabelEdge> edges() const;

  UndirectedGraph without_edges(std::span<const IndexEdge> removed) const;

  /// Same node set and same edge set, compared by label. Node order is ignored.
  friend bool operator==(const UndirectedGraph& a, const UndirectedGraph& b);

 private:
  void index_nodes();
  void add_edge(std::size_t a, std::size_t b);
  void finalize();

  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<IndexEdge> edges_;
};

/// Directed graph; arcs are ordered (from, to) pairs.
class DirectedGraph {
 public:
  DirectedGraph() = default;
  DirectedGraph(std::vector<std::string> nodes, const std::vector<LabelEdge>& arcs);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t arc_count() const noexcept { return arc_count_; }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }

  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;

  bool has_arc(std::size_t from, std::size_t to) const;
  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }

  /// Arcs in (from, to) index order.
  std::vector<std::pair<std::size_t, std::size_t>> index_arcs() const;
  std::vector<LabelEdge> arcs() const;

  /// Induced subgraph on the nodes flagged in keep, preserving relative order.
  DirectedGraph induced(const std::vector<char>& keep) const;

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::size_t arc_count_ = 0;
};

/// A validated tree: connected and acyclic.
class TreeTopology {
 public:
  TreeTopology() = default;

  const UndirectedGraph& graph() const noexcept { return graph_; }
  std::size_t diameter() const noexcept { return diameter_; }
  std::size_t node_count() const noexcept { return graph_.node_count(); }

  friend bool operator==(const TreeTopology& a, const TreeTopology& b) {
    return a.graph_ == b.graph_;
  }

 private:
  friend TreeTopology validate_tree(const UndirectedGraph& g);
  TreeTopology(UndirectedGraph g, std::size_t diameter)
      : graph_(std::move(g)), diameter_(diameter) {}

  UndirectedGraph graph_;
  std::size_t diameter_ = 0;
};

/// Throws NotConnectedError or HasCycleError.
TreeTopology validate_tree(const UndirectedGraph& g);

/// Longest shortest-path length (in edges) of a connected graph.
std::size_t graph_diameter(const UndirectedGraph& g);

/// Nodes at distance exactly two through a common neighbor.
NodeSet two_hop_neighbors(const UndirectedGraph& g, std::string_view node);
std::vector<std::size_t> two_hop_indices(const UndirectedGraph& g, std::size_t i);

/// Tree edges plus every two-hop pair.
UndirectedGraph kin_graph_oracle(const TreeTopology& tree);

struct Separation {
  bool separated = false;
  std::vector<NodeSet> components;
};

/// Deletes Z and reports the connected components of what remains.
/// Throws EmptyRemainder when Z covers every node.
Separation separates(const UndirectedGraph& g, const NodeSet& removed);

/// Components (as index lists, ordered by smallest member) of g with the
/// flagged nodes deleted.
std::vector<std::vector<std::size_t>> components_without(const UndirectedGraph& g,
                                                         const std::vector<char>& removed);

/// Drops orientation and marries every pair of parents sharing a child.
UndirectedGraph moralize(const DirectedGraph& g);

/// Induced subgraph on an(B), the reflexive ancestral closure of B.
DirectedGraph ancestral_graph(const DirectedGraph& g, const NodeSet& nodes);

/// Vertex separation of I and J by Z in the moralized ancestral graph of
/// I u Z u J. Throws OverlappingSets unless the three sets are disjoint.
bool d_separated(const DirectedGraph& g, const NodeSet& from, const NodeSet& given,
                 const NodeSet& to);
bool d_separated(const DirectedGraph& g, std::span<const std::size_t> from,
                 std::span<const std::size_t> given, std::span<const std::size_t> to);

/// Arcs in both directions for every edge of g.
DirectedGraph bidirected(const UndirectedGraph& g);

NodeSet leaf_nodes(const UndirectedGraph& g);

/// Labels "1", "2", ..., "n".
std::vector<std::string> numbered_labels(std::size_t n);

/// Decodes a Pruefer sequence (values in [0, labels.size())) into a tree.
TreeTopology tree_from_pruefer(std::span<const std::size_t> sequence,
                               std::vector<std::string> labels);

/// Calls visit once for every labelled tree on nodes "1".."n" (n^(n-2) trees).
void for_each_labelled_tree(std::size_t n, const std::function<void(const TreeTopology&)>& visit);

/// Uniform labelled tree on "1".."n" by Pruefer decoding, resampled until its
/// diameter reaches min_diameter. Deterministic per seed. Throws Infeasible
/// when min_diameter > n - 1.
TreeTopology random_tree(std::size_t n, std::uint64_t seed, std::size_t min_diameter);

}  // namespace treeid
