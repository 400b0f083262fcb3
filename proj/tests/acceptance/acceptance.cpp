// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "treeid/error.hpp"
#include "treeid/graph.hpp"
#include "treeid/harness.hpp"
#include "treeid/prune.hpp"
#include "treeid/spectral.hpp"
#include "treeid/wiener.hpp"

using namespace treeid;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename... Args>
std::string format(Args&&... args) {
  std::ostringstream out;
  (out << ... << args);
  return out.str();
}

// Trees on 5..8 nodes with diameter at least 4, every labelling.
std::vector<TreeTopology> exhaustive_corpus() {
  std::vector<TreeTopology> out;
  for (std::size_t n = 5; n <= 8; ++n) {
    for_each_labelled_tree(n, [&](const TreeTopology& t) {
      if (t.diameter() >= 4) out.push_back(t);
    });
  }
  return out;
}

SpectralDensityField simulated_field(const GridNetworkModel& model, std::size_t n_samples,
                                     std::uint64_t seed) {
  const auto dss = discretize_zoh(model);
  WelchConfig cfg;
  WelchAccumulator acc(model.labels(), cfg);
  simulate_stream(dss, model.noise, {n_samples, seed, 1'000}, [&](std::span<const double> y) { acc.push(y); });
  return acc.finish();
}

Verdict round_trip(const std::vector<TreeTopology>& corpus) {
  const auto start = Clock::now();
  std::size_t total = 0, exact = 0;
  auto check = [&](const TreeTopology& t) {
    ++total;
    try {
      if (reconstruct_tree(kin_graph_oracle(t)).tree == t.graph()) ++exact;
    } catch (const Error&) {
    }
  };
  for (const auto& t : corpus) check(t);
  for (std::uint64_t seed = 0; seed < 500; ++seed) check(random_tree(9 + seed % 32, seed, 4));
  const double secs = seconds_since(start);
  return {exact == total && secs < 30.0,
          format(exact, "/", total, " exact, ", secs, " s (limit 30 s)")};
}

Verdict separation_matches_dsep(const std::vector<TreeTopology>& corpus) {
  std::size_t edges = 0, counterexamples = 0;
  for (const auto& t : corpus) {
    const auto& g = t.graph();
    const auto kin = kin_graph_oracle(t);
    const auto arcs = bidirected(g);
    const std::size_t n = g.node_count();
    for (const auto& e : g.index_edges()) {
      ++edges;
      const bool nonleaf = g.degree(e.u) > 1 && g.degree(e.v) > 1;
      const NodeSet cut{g.label(e.u), g.label(e.v)};
      const bool split = separates(kin, cut).separated;
      const bool split_oracle = oracle::component_count_without(kin, {cut.begin(), cut.end()}) > 1;

      // Some pair outside the cut is d-separated by it in the bi-directed tree.
      const std::size_t given[2] = {e.u, e.v};
      bool dsep = false;
      for (std::size_t x = 0; x < n && !dsep; ++x) {
        if (x == e.u || x == e.v) continue;
        for (std::size_t y = x + 1; y < n && !dsep; ++y) {
          if (y == e.u || y == e.v) continue;
          const std::size_t from[1] = {x}, to[1] = {y};
          dsep = d_separated(arcs, from, given, to);
        }
      }
      if (split != nonleaf || split_oracle != nonleaf || dsep != nonleaf) ++counterexamples;
    }
  }
  return {counterexamples == 0,
          format(counterexamples, " counterexamples over ", edges, " edges of ", corpus.size(), " trees")};
}

Verdict analytic_chain() {
  const auto start = Clock::now();
  const auto model = chain_case(5);
  const auto field = analytic_psd(discretize_zoh(model), model.noise, fft_grid(WelchConfig{}.window_len),
                                  model.labels());
  const auto fr = reconstruct_from_field(field, {});
  const auto want_kin = kin_graph_oracle(model.topology);
  const auto want_tree = oracle::chain(5);
  const double secs = seconds_since(start);
  const bool ok = fr.kin.graph == want_kin && fr.kin.graph.edge_count() == 7 &&
                  fr.reconstruction.tree == want_tree && secs < 5.0;
  return {ok, format("kin edges ", fr.kin.graph.edge_count(), (fr.kin.graph == want_kin ? " (match)" : " (differ)"),
                     ", tree ", (fr.reconstruction.tree == want_tree ? "= chain" : "!= chain"), ", ", secs,
                     " s (limit 5 s)")};
}

Verdict simulated_chain() {
  const auto start = Clock::now();
  const auto model = chain_case(5);
  auto exact_at = [&](std::size_t n_samples) {
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      try {
        const auto fr = reconstruct_from_field(simulated_field(model, n_samples, seed), {});
        if (fr.reconstruction.tree == model.topology.graph()) ++hits;
      } catch (const Error&) {
      }
    }
    return hits;
  };
  const auto short_hits = exact_at(200'000);
  const auto long_hits = exact_at(1'000'000);
  const double secs = seconds_since(start);
  return {short_hits >= 18 && long_hits == 20 && secs < 120.0,
          format("N=2e5 ", short_hits, "/20 (need 18), N=1e6 ", long_hits, "/20 (need 20), ", secs,
                 " s (limit 120 s)")};
}

Verdict ieee39(std::size_t n_samples, std::size_t seeds, bool need_exact) {
  const auto start = Clock::now();
  const auto model = ieee39_tree_case();
  double worst_f1 = 1.0;
  std::size_t exact = 0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    double f1 = 0.0;
    try {
      const auto fr = reconstruct_from_field(simulated_field(model, n_samples, seed), {});
      const auto m = compare_topologies(fr.reconstruction.tree, model.topology.graph());
      f1 = m.f1;
      if (m.exact_match) ++exact;
    } catch (const Error& e) {
      std::cerr << "  ieee39 seed " << seed << ": " << e.what() << "\n";
    }
    worst_f1 = std::min(worst_f1, f1);
  }
  const bool ok = need_exact ? exact == seeds : worst_f1 >= 0.95;
  return {ok, format("N=", n_samples, ", ", seeds, " seeds, min F1 ", worst_f1, " (need 0.95), exact ", exact, "/",
                     seeds, ", ", seconds_since(start), " s")};
}

Verdict wiener_dual_path() {
  double worst = 0.0;
  for (unsigned trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + trial % 9;
    std::vector<Eigen::MatrixXcd> mats;
    for (unsigned f = 0; f < 64; ++f) mats.push_back(oracle::random_hpd(m, 0.5, 5.0, 1000 * trial + f));
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < m; ++i) labels.push_back("n" + std::to_string(i));
    const auto field = SpectralDensityField::make(labels, fft_grid(128), mats);
    const auto a = wiener_filters(field, 0.0);
    const auto b = inverse_psd_filters(field, 0.0);
    for (std::size_t f = 0; f < 64; ++f) worst = std::max(worst, (a.filters[f] - b.filters[f]).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, format("max |difference| ", worst, " (limit 1e-8)")};
}

Verdict spectral_accuracy() {
  const auto model = chain_case(3);
  const auto estimate = simulated_field(model, 1'000'000, 21);
  const auto truth = analytic_psd(discretize_zoh(model), model.noise, estimate.grid, model.labels());
  double rel = 0.0;
  for (std::size_t f = 0; f < estimate.bin_count(); ++f) {
    rel += (estimate.matrices[f] - truth.matrices[f]).norm() / truth.matrices[f].norm();
  }
  rel /= static_cast<double>(estimate.bin_count());

  // White noise, 2^20 samples: unit diagonal and negligible cross terms.
  const std::size_t m = 3, n = 1u << 20;
  NoiseSpec white = NoiseSpec::white(m, 1.0);
  DiscreteStateSpace pass{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Identity(m, m), 1.0};
  const auto panel = simulate(pass, white, {n, 5, 0}, {"a", "b", "c"});
  const auto flat = welch_cross_psd(panel, {});
  std::size_t diag_ok = 0, off_ok = 0, diag_total = 0, off_total = 0;
  for (const auto& mat : flat.matrices) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      ++diag_total;
      if (std::abs(mat(i, i).real() - 1.0) <= 0.1) ++diag_ok;
      for (Eigen::Index k = i + 1; k < 3; ++k) {
        ++off_total;
        if (std::abs(mat(i, k)) < 0.05) ++off_ok;
      }
    }
  }
  const double diag_frac = static_cast<double>(diag_ok) / static_cast<double>(diag_total);
  const double off_frac = static_cast<double>(off_ok) / static_cast<double>(off_total);
  return {rel <= 0.10 && diag_frac >= 0.95 && off_frac >= 0.95,
          format("chain3 mean relative error ", rel, " (limit 0.10), white diag in band ", diag_frac,
                 ", off-diag small ", off_frac, " (need 0.95)")};
}

Verdict negative_controls() {
  std::size_t cases = 0, correct = 0;
  auto expect = [&](const UndirectedGraph& tree, ErrorCode code) {
    ++cases;
    try {
      reconstruct_tree(kin_graph_oracle(validate_tree(tree)));
    } catch (const Error& e) {
      if (e.code() == code) ++correct;
    }
  };
  // Double stars: centres x, y joined, with p and q leaves on each side.
  for (std::size_t p = 2; p <= 4; ++p) {
    for (std::size_t q = 2; q <= 4; ++q) {
      std::vector<std::string> nodes{"x", "y"};
      std::vector<LabelEdge> edges{{"x", "y"}};
      for (std::size_t i = 0; i < p; ++i) {
        nodes.push_back("p" + std::to_string(i));
        edges.emplace_back("x", nodes.back());
      }
      for (std::size_t i = 0; i < q; ++i) {
        nodes.push_back("q" + std::to_string(i));
        edges.emplace_back("y", nodes.back());
      }
      expect(UndirectedGraph(nodes, edges), ErrorCode::Ambiguous);
    }
  }
  for (std::size_t leaves = 4; leaves <= 9; ++leaves) {
    std::vector<std::string> nodes{"c"};
    std::vector<LabelEdge> edges;
    for (std::size_t i = 0; i < leaves; ++i) {
      nodes.push_back("l" + std::to_string(i));
      edges.emplace_back("c", nodes.back());
    }
    expect(UndirectedGraph(nodes, edges), ErrorCode::AssumptionViolated);
  }
  return {correct == cases, format(correct, "/", cases, " double-star and star inputs raised the expected error")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treeid acceptance suite"};
  bool long_run = false;
  app.add_flag("--long-run", long_run, "Run only the 10^7-sample IEEE-39 profile");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;
  if (long_run) {
    criteria.emplace_back("5L ieee39 long run exact", [] { return ieee39(10'000'000, 1, true); });
  } else {
    const auto corpus = exhaustive_corpus();
    criteria.emplace_back("1 oracle round trip", [corpus] { return round_trip(corpus); });
    criteria.emplace_back("2 separation equals non-leaf edge", [corpus] { return separation_matches_dsep(corpus); });
    criteria.emplace_back("3 analytic chain5", analytic_chain);
    criteria.emplace_back("4 simulated chain5", simulated_chain);
    criteria.emplace_back("5 ieee39 at 1e6 samples", [] { return ieee39(1'000'000, 5, false); });
    criteria.emplace_back("6 wiener dual path", wiener_dual_path);
    criteria.emplace_back("7 spectral accuracy", spectral_accuracy);
    criteria.emplace_back("8 negative controls", negative_controls);
  }

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : format(failures, " criteria failed")) << std::endl;
  return failures == 0 ? 0 : 1;
}
