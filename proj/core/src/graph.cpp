#include "treeid/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>

#include "treeid/error.hpp"

namespace treeid {

// ---------------------------------------------------------------------------
// UndirectedGraph

UndirectedGraph::UndirectedGraph(std::vector<std::string> nodes,
                                 const std::vector<LabelEdge>& edges)
    : nodes_(std::move(nodes)) {
  index_nodes();
  for (const auto& [a, b] : edges) {
    const std::size_t i = index_of(a);
    const std::size_t j = index_of(b);
    if (i == j) throw Error(ErrorCode::SchemaError, "self-loop on node " + a);
    if (adjacent(i, j)) throw Error(ErrorCode::SchemaError, "duplicate edge " + a + "-" + b);
    add_edge(i, j);
  }
  finalize();
}

UndirectedGraph UndirectedGraph::from_index_edges(std::vector<std::string> nodes,
                                                  std::span<const IndexEdge> edges) {
  UndirectedGraph g;
  g.nodes_ = std::move(nodes);
  g.index_nodes();
  for (const auto& e : edges) {
    if (e.v >= g.nodes_.size()) throw Error(ErrorCode::UnknownNode, "edge index out of range");
    if (e.u == e.v) throw Error(ErrorCode::SchemaError, "self-loop on node " + g.nodes_[e.u]);
    if (g.adjacent(e.u, e.v)) {
      throw Error(ErrorCode::SchemaError,
                  "duplicate edge " + g.nodes_[e.u] + "-" + g.nodes_[e.v]);
    }
    g.add_edge(e.u, e.v);
  }
  g.finalize();
  return g;
}

void UndirectedGraph::index_nodes() {
  index_.clear();
  index_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], i).second) {
      throw Error(ErrorCode::SchemaError, "duplicate node " + nodes_[i]);
    }
  }
  adj_.assign(nodes_.size(), {});
  edges_.clear();
}

void UndirectedGraph::add_edge(std::size_t a, std::size_t b) {
  adj_[a].push_back(b);
  adj_[b].push_back(a);
  edges_.emplace_back(a, b);
}

void UndirectedGraph::finalize() {
  for (auto& n : adj_) std::sort(n.begin(), n.end());
  std::sort(edges_.begin(), edges_.end());
}

std::optional<std::size_t> UndirectedGraph::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t UndirectedGraph::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorCode::UnknownNode, "unknown node " + std::string(label));
}

bool UndirectedGraph::adjacent(std::size_t i, std::size_t j) const {
  const auto& n = adj_.at(i);
  return std::binary_search(n.begin(), n.end(), j);
}

bool UndirectedGraph::has_edge(std::string_view a, std::string_view b) const {
  auto i = find(a);
  auto j = find(b);
  return i && j && adjacent(*i, *j);
}

NodeSet UndirectedGraph::neighbor_labels(std::string_view label) const {
  NodeSet out;
  for (std::size_t j : adj_[index_of(label)]) out.insert(nodes_[j]);
  return out;
}

std::vector<LabelEdge> UndirectedGraph::edges() const {
  std::vector<LabelEdge> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) {
    const auto& a = nodes_[e.u];
    const auto& b = nodes_[e.v];
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  return out;
}

UndirectedGraph UndirectedGraph::without_edges(std::span<const IndexEdge> removed) const {
  std::vector<IndexEdge> kept;
  kept.reserve(edges_.size());
  for (const auto& e : edges_) {
    if (std::find(removed.begin(), removed.end(), e) == removed.end()) kept.push_back(e);
  }
  return from_index_edges(nodes_, kept);
}

bool operator==(const UndirectedGraph& a, const UndirectedGraph& b) {
  if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
  for (const auto& n : a.nodes_) {
    if (!b.contains(n)) return false;
  }
  return a.edges() == b.edges();
}

// ---------------------------------------------------------------------------
// DirectedGraph

DirectedGraph::DirectedGraph(std::vector<std::string> nodes, const std::vector<LabelEdge>& arcs)
    : nodes_(std::move(nodes)) {
  index_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], i).second) {
      throw Error(ErrorCode::SchemaError, "duplicate node " + nodes_[i]);
    }
  }
  parents_.assign(nodes_.size(), {});
  children_.assign(nodes_.size(), {});
  for (const auto& [from, to] : arcs) {
    const std::size_t i = index_of(from);
    const std::size_t j = index_of(to);
    if (i == j) throw Error(ErrorCode::SchemaError, "self-arc on node " + from);
    if (has_arc(i, j)) continue;
    children_[i].push_back(j);
    parents_[j].push_back(i);
    ++arc_count_;
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());
}

std::optional<std::size_t> DirectedGraph::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t DirectedGraph::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorCode::UnknownNode, "unknown node " + std::string(label));
}

bool DirectedGraph::has_arc(std::size_t from, std::size_t to) const {
  const auto& c = children_.at(from);
  return std::find(c.begin(), c.end(), to) != c.end();
}

std::vector<std::pair<std::size_t, std::size_t>> DirectedGraph::index_arcs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(arc_count_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t j : children_[i]) out.emplace_back(i, j);
  }
  return out;
}

std::vector<LabelEdge> DirectedGraph::arcs() const {
  std::vector<LabelEdge> out;
  for (const auto& [i, j] : index_arcs()) out.emplace_back(nodes_[i], nodes_[j]);
  return out;
}

DirectedGraph DirectedGraph::induced(const std::vector<char>& keep) const {
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (keep[i]) nodes.push_back(nodes_[i]);
  }
  std::vector<LabelEdge> arcs;
  for (const auto& [i, j] : index_arcs()) {
    if (keep[i] && keep[j]) arcs.emplace_back(nodes_[i], nodes_[j]);
  }
  return DirectedGraph(std::move(nodes), arcs);
}

// ---------------------------------------------------------------------------
// Trees

namespace {

std::vector<std::size_t> bfs_distances(const UndirectedGraph& g, std::size_t source) {
  constexpr auto unreached = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(g.node_count(), unreached);
  std::vector<std::size_t> queue{source};
  dist[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t v : g.neighbors(u)) {
      if (dist[v] == unreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t root(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  std::vector<std::size_t> parent;
};

// Path between two nodes in a forest given as adjacency lists.
std::vector<std::size_t> forest_path(const std::vector<std::vector<std::size_t>>& adj,
                                     std::size_t from, std::size_t to) {
  constexpr auto none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> prev(adj.size(), none);
  std::vector<std::size_t> queue{from};
  prev[from] = from;
  for (std::size_t head = 0; head < queue.size() && prev[to] == none; ++head) {
    for (std::size_t v : adj[queue[head]]) {
      if (prev[v] == none) {
        prev[v] = queue[head];
        queue.push_back(v);
      }
    }
  }
  std::vector<std::size_t> path;
  for (std::size_t x = to; x != from; x = prev[x]) path.push_back(x);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

std::size_t graph_diameter(const UndirectedGraph& g) {
  if (g.node_count() <= 1) return 0;
  auto d0 = bfs_distances(g, 0);
  const auto far = static_cast<std::size_t>(std::max_element(d0.begin(), d0.end()) - d0.begin());
  auto d1 = bfs_distances(g, far);
  return *std::max_element(d1.begin(), d1.end());
}

TreeTopology validate_tree(const UndirectedGraph& g) {
  if (g.empty()) throw Error(ErrorCode::InvalidArgument, "tree validation of an empty graph");
  const std::size_t n = g.node_count();

  DisjointSets sets(n);
  std::vector<std::vector<std::size_t>> forest(n);
  for (const auto& e : g.index_edges()) {
    const std::size_t ru = sets.root(e.u);
    const std::size_t rv = sets.root(e.v);
    if (ru == rv) {
      std::vector<std::string> cycle;
      for (std::size_t i : forest_path(forest, e.u, e.v)) cycle.push_back(g.label(i));
      throw HasCycleError(std::move(cycle));
    }
    sets.parent[ru] = rv;
    forest[e.u].push_back(e.v);
    forest[e.v].push_back(e.u);
  }

  auto comps = components_without(g, std::vector<char>(n, 0));
  if (comps.size() > 1) {
    std::vector<std::vector<std::string>> labelled;
    for (const auto& c : comps) {
      auto& out = labelled.emplace_back();
      for (std::size_t i : c) out.push_back(g.label(i));
    }
    throw NotConnectedError(std::move(labelled));
  }
  return TreeTopology(g, graph_diameter(g));
}

std::vector<std::size_t> two_hop_indices(const UndirectedGraph& g, std::size_t i) {
  std::vector<char> mark(g.node_count(), 0);
  for (std::size_t j : g.neighbors(i)) {
    for (std::size_t k : g.neighbors(j)) mark[k] = 1;
  }
  mark[i] = 0;
  for (std::size_t j : g.neighbors(i)) mark[j] = 0;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < mark.size(); ++k) {
    if (mark[k]) out.push_back(k);
  }
  return out;
}

NodeSet two_hop_neighbors(const UndirectedGraph& g, std::string_view node) {
  NodeSet out;
  for (std::size_t k : two_hop_indices(g, g.index_of(node))) out.insert(g.label(k));
  return out;
}

UndirectedGraph kin_graph_oracle(const TreeTopology& tree) {
  const auto& g = tree.graph();
  std::vector<IndexEdge> edges(g.index_edges().begin(), g.index_edges().end());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    for (std::size_t k : two_hop_indices(g, i)) {
      if (i < k) edges.emplace_back(i, k);
    }
  }
  return UndirectedGraph::from_index_edges(g.nodes(), edges);
}

std::vector<std::vector<std::size_t>> components_without(const UndirectedGraph& g,
                                                         const std::vector<char>& removed) {
  const std::size_t n = g.node_count();
  std::vector<char> seen(removed.begin(), removed.end());
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    auto& comp = comps.emplace_back();
    comp.push_back(s);
    seen[s] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      for (std::size_t v : g.neighbors(comp[head])) {
        if (!seen[v]) {
          seen[v] = 1;
          comp.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
  }
  return comps;
}

Separation separates(const UndirectedGraph& g, const NodeSet& removed) {
  std::vector<char> mask(g.node_count(), 0);
  for (const auto& z : removed) mask[g.index_of(z)] = 1;
  if (removed.size() >= g.node_count()) {
    throw Error(ErrorCode::EmptyRemainder, "separator covers every node");
  }
  Separation out;
  for (const auto& comp : components_without(g, mask)) {
    auto& labels = out.components.emplace_back();
    for (std::size_t i : comp) labels.insert(g.label(i));
  }
  out.separated = out.components.size() >= 2;
  return out;
}

UndirectedGraph moralize(const DirectedGraph& g) {
  std::set<IndexEdge> edges;
  for (std::size_t c = 0; c < g.node_count(); ++c) {
    const auto& ps = g.parents(c);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      edges.emplace(ps[a], c);
      for (std::size_t b = a + 1; b < ps.size(); ++b) edges.emplace(ps[a], ps[b]);
    }
  }
  std::vector<IndexEdge> list(edges.begin(), edges.end());
  return UndirectedGraph::from_index_edges(g.nodes(), list);
}

namespace {

std::vector<char> ancestral_mask(const DirectedGraph& g, std::span<const std::size_t> seeds) {
  std::vector<char> keep(g.node_count(), 0);
  std::vector<std::size_t> stack(seeds.begin(), seeds.end());
  for (std::size_t s : seeds) keep[s] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t p : g.parents(v)) {
      if (!keep[p]) {
        keep[p] = 1;
        stack.push_back(p);
      }
    }
  }
  return keep;
}

}  // namespace

DirectedGraph ancestral_graph(const DirectedGraph& g, const NodeSet& nodes) {
  std::vector<std::size_t> seeds;
  for (const auto& b : nodes) seeds.push_back(g.index_of(b));
  return g.induced(ancestral_mask(g, seeds));
}

bool d_separated(const DirectedGraph& g, std::span<const std::size_t> from,
                 std::span<const std::size_t> given, std::span<const std::size_t> to) {
  const std::size_t n = g.node_count();
  if (from.empty() || to.empty()) {
    throw Error(ErrorCode::InvalidArgument, "d-separation needs nonempty end sets");
  }
  // 1 = from, 2 = given, 3 = to
  std::vector<unsigned char> role(n, 0);
  auto assign = [&](std::span<const std::size_t> set, unsigned char r) {
    for (std::size_t i : set) {
      if (i >= n) throw Error(ErrorCode::UnknownNode, "node index out of range");
      if (role[i] != 0 && role[i] != r) {
        throw Error(ErrorCode::OverlappingSets, "node " + g.nodes()[i] + " appears in two sets");
      }
      role[i] = r;
    }
  };
  assign(from, 1);
  assign(given, 2);
  assign(to, 3);

  std::vector<std::size_t> seeds;
  seeds.reserve(from.size() + given.size() + to.size());
  seeds.insert(seeds.end(), from.begin(), from.end());
  seeds.insert(seeds.end(), given.begin(), given.end());
  seeds.insert(seeds.end(), to.begin(), to.end());
  const auto keep = ancestral_mask(g, seeds);

  // Moral graph of the ancestral subgraph as a dense adjacency matrix.
  std::vector<char> moral(n * n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    if (!keep[c]) continue;
    const auto& ps = g.parents(c);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      moral[ps[a] * n + c] = moral[c * n + ps[a]] = 1;
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        moral[ps[a] * n + ps[b]] = moral[ps[b] * n + ps[a]] = 1;
      }
    }
  }

  std::vector<char> seen(n, 0);
  std::vector<std::size_t> queue(from.begin(), from.end());
  for (std::size_t i : from) seen[i] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t v = 0; v < n; ++v) {
      if (!moral[u * n + v] || seen[v] || !keep[v] || role[v] == 2) continue;
      if (role[v] == 3) return false;
      seen[v] = 1;
      queue.push_back(v);
    }
  }
  return true;
}

bool d_separated(const DirectedGraph& g, const NodeSet& from, const NodeSet& given,
                 const NodeSet& to) {
  auto indices = [&](const NodeSet& s) {
    std::vector<std::size_t> out;
    for (const auto& l : s) out.push_back(g.index_of(l));
    return out;
  };
  const auto i = indices(from);
  const auto z = indices(given);
  const auto j = indices(to);
  return d_separated(g, std::span<const std::size_t>(i), z, j);
}

DirectedGraph bidirected(const UndirectedGraph& g) {
  std::vector<LabelEdge> arcs;
  arcs.reserve(2 * g.edge_count());
  for (const auto& e : g.index_edges()) {
    arcs.emplace_back(g.label(e.u), g.label(e.v));
    arcs.emplace_back(g.label(e.v), g.label(e.u));
  }
  return DirectedGraph(g.nodes(), arcs);
}

NodeSet leaf_nodes(const UndirectedGraph& g) {
  NodeSet out;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.degree(i) <= 1) out.insert(g.label(i));
  }
  return out;
}

std::vector<std::string> numbered_labels(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.push_back(std::to_string(i));
  return out;
}

TreeTopology tree_from_pruefer(std::span<const std::size_t> sequence,
                               std::vector<std::string> labels) {
  const std::size_t n = labels.size();
  if (n < 2 || sequence.size() != n - 2) {
    throw Error(ErrorCode::InvalidArgument, "Pruefer sequence length must be n - 2");
  }
  std::vector<std::size_t> degree(n, 1);
  for (std::size_t s : sequence) {
    if (s >= n) throw Error(ErrorCode::InvalidArgument, "Pruefer entry out of range");
    ++degree[s];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> leaves;
  for (std::size_t i = 0; i < n; ++i) {
    if (degree[i] == 1) leaves.push(i);
  }
  std::vector<IndexEdge> edges;
  edges.reserve(n - 1);
  for (std::size_t s : sequence) {
    const std::size_t leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(leaf, s);
    if (--degree[s] == 1) leaves.push(s);
  }
  const std::size_t a = leaves.top();
  leaves.pop();
  edges.emplace_back(a, leaves.top());
  return validate_tree(UndirectedGraph::from_index_edges(std::move(labels), edges));
}

void for_each_labelled_tree(std::size_t n,
                            const std::function<void(const TreeTopology&)>& visit) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "trees need at least two nodes");
  const auto labels = numbered_labels(n);
  std::vector<std::size_t> seq(n - 2, 0);
  while (true) {
    visit(tree_from_pruefer(seq, labels));
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
}

TreeTopology random_tree(std::size_t n, std::uint64_t seed, std::size_t min_diameter) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "random_tree needs n >= 2");
  if (min_diameter > n - 1) {
    throw Error(ErrorCode::Infeasible, "diameter " + std::to_string(min_diameter) +
                                           " impossible on " + std::to_string(n) + " nodes");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const auto labels = numbered_labels(n);
  std::vector<std::size_t> seq(n - 2);

  constexpr int max_attempts = 20000;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (auto& s : seq) s = pick(rng);
    auto tree = tree_from_pruefer(seq, labels);
    if (tree.diameter() >= min_diameter) return tree;
  }

  // Long diameters are exponentially rare among uniform trees: lay down a
  // random spine of the requested length and hang the rest off it.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<IndexEdge> edges;
  for (std::size_t k = 1; k <= min_diameter; ++k) edges.emplace_back(order[k - 1], order[k]);
  for (std::size_t k = min_diameter + 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> anchor(0, k - 1);
    edges.emplace_back(order[anchor(rng)], order[k]);
  }
  return validate_tree(UndirectedGraph::from_index_edges(labels, edges));
}

}  // namespace treeid
