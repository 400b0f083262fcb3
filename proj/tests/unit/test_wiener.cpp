#include "doctest.h"

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "treeid/error.hpp"
#include "treeid/spectral.hpp"
#include "treeid/wiener.hpp"

using namespace treeid;
using cd = std::complex<double>;

namespace {

SpectralDensityField constant_field(const Eigen::MatrixXcd& m, std::size_t bins) {
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < m.rows(); ++i) labels.push_back(std::to_string(i + 1));
  const auto grid = fft_grid(2 * bins);
  return SpectralDensityField::make(labels, grid, std::vector<Eigen::MatrixXcd>(bins, m));
}

SpectralDensityField chain_field(std::size_t n) {
  const auto model = GridNetworkModel::uniform(validate_tree(oracle::chain(n)));
  return analytic_psd(discretize_zoh(model), model.noise, fft_grid(1024), model.labels());
}

CouplingScores scores_from(const Eigen::MatrixXd& s) {
  CouplingScores out;
  for (Eigen::Index i = 0; i < s.rows(); ++i) out.labels.push_back(std::to_string(i + 1));
  out.scores = s;
  out.symmetrized = true;
  return out;
}

}  // namespace

TEST_CASE("diagonal fields give zero filters") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
  d.diagonal() << 1.0, 2.0, 0.5;
  const auto bank = wiener_filters(constant_field(d, 8));
  for (const auto& w : bank.filters) CHECK(w.isZero(0.0));
  const auto inv = inverse_psd_filters(constant_field(Eigen::MatrixXcd::Identity(3, 3), 8));
  for (const auto& w : inv.filters) CHECK(w.isZero(0.0));
}

TEST_CASE("two-node filters") {
  const cd rho(0.3, -0.4);
  Eigen::MatrixXcd phi(2, 2);
  phi << 1.0, rho, std::conj(rho), 1.0;
  const auto field = constant_field(phi, 4);
  const double eps = 0.01;
  const auto bank = wiener_filters(field, eps);
  for (const auto& w : bank.filters) {
    CHECK(std::abs(w(0, 1) - rho / (1.0 + eps)) < 1e-15);
    CHECK(std::abs(w(1, 0) - std::conj(rho) / (1.0 + eps)) < 1e-15);
  }
  const auto exact = inverse_psd_filters(field, 0.0);
  for (const auto& w : exact.filters) CHECK(std::abs(w(0, 1) - rho) < 1e-14);
  CHECK(bank.ridge.front() == eps);
}

TEST_CASE("default ridge") {
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4) * 3.0;
  CHECK(default_ridge(phi) == doctest::Approx(3e-6));
}

TEST_CASE("solve and inverse paths agree on random well-conditioned fields") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const std::size_t m = 2 + seed % 9;
    std::vector<Eigen::MatrixXcd> mats;
    for (unsigned f = 0; f < 16; ++f) mats.push_back(oracle::random_hpd(m, 0.5, 4.0, seed * 100 + f));
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < m; ++i) labels.push_back("v" + std::to_string(i));
    const auto field = SpectralDensityField::make(labels, fft_grid(32), mats);
    const auto a = wiener_filters(field, 0.0);
    const auto b = inverse_psd_filters(field, 0.0);
    for (std::size_t f = 0; f < 16; ++f) CHECK((a.filters[f] - b.filters[f]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("singular blocks are reported") {
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Ones(3, 3);
  try {
    wiener_filters(constant_field(phi, 2), 0.0);
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularBlock);
  }
  CHECK_THROWS_AS(wiener_filters(constant_field(Eigen::MatrixXcd::Identity(2, 2), 2), -1.0), Error);
}

TEST_CASE("chain5 analytic filters vanish exactly on non-kin pairs") {
  const auto field = chain_field(5);
  const auto bank = wiener_filters(field, 0.0);
  const auto kin = kin_graph_oracle(validate_tree(oracle::chain(5)));
  double max_non = 0.0, min_kin = 1e300;
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < 5; ++i) {
      if (i == j) continue;
      double peak = 0.0;
      for (const auto& w : bank.filters) {
        peak = std::max(peak, std::abs(w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))));
      }
      if (kin.adjacent(i, j)) {
        min_kin = std::min(min_kin, peak);
      } else {
        max_non = std::max(max_non, peak);
      }
    }
  }
  CHECK(max_non < 1e-6);
  CHECK(min_kin > 1e3 * max_non);
}

TEST_CASE("magnitude scores") {
  Eigen::MatrixXcd zero = Eigen::MatrixXcd::Identity(3, 3);
  const auto z = coupling_scores(wiener_filters(constant_field(zero, 4)), ScoreMethod::Magnitude);
  CHECK(z.scores.isZero(0.0));

  WienerFilterBank bank;
  bank.labels = {"1", "2"};
  bank.grid = fft_grid(8);
  Eigen::MatrixXcd w(2, 2);
  w << 0.0, cd(0.0, 0.4), 0.1, 0.0;
  bank.filters.assign(4, w);
  const auto s = coupling_scores(bank);
  CHECK(s.kind == ScoreKind::Magnitude);
  CHECK(s.symmetrized);
  CHECK(s.scores(0, 1) == doctest::Approx(0.4));
  CHECK(s.scores(1, 0) == doctest::Approx(0.4));
  CHECK(s.at("2", "1") == doctest::Approx(0.4));
  CHECK(s.scores(0, 0) == 0.0);
}

TEST_CASE("significance scores need an estimated field") {
  WienerFilterBank bank;
  bank.labels = {"1", "2", "3"};
  bank.grid = fft_grid(8);
  bank.filters.assign(4, Eigen::MatrixXcd::Zero(3, 3));
  bank.equivalent_segments = 2.5;
  CHECK_THROWS_AS(coupling_scores(bank, ScoreMethod::Significance), Error);
  bank.equivalent_segments = 500.0;
  const auto s = coupling_scores(bank);
  CHECK(s.kind == ScoreKind::Significance);
  CHECK(s.scores.isZero(0.0));
}

TEST_CASE("threshold policies") {
  SUBCASE("gap arithmetic") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
    auto put = [&](int i, int j, double v) { s(i, j) = s(j, i) = v; };
    put(0, 1, 0.9);
    put(1, 2, 0.8);
    put(2, 3, 0.05);
    put(0, 3, 0.04);
    const auto sel = threshold_kin(scores_from(s), ThresholdPolicy::gap());
    CHECK(sel.rule == "gap");
    CHECK(sel.graph.edge_count() == 2);
    CHECK(sel.graph.has_edge("1", "2"));
    CHECK(sel.graph.has_edge("2", "3"));
  }
  SUBCASE("fallback without a large gap") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
    s(0, 1) = s(1, 0) = 1.0;
    s(1, 2) = s(2, 1) = 0.5;
    s(0, 2) = s(2, 0) = 0.06;
    const auto sel = threshold_kin(scores_from(s), ThresholdPolicy::gap());
    CHECK(sel.rule == "gap-fallback");
    CHECK(sel.threshold == doctest::Approx(0.05));
    CHECK(sel.graph.edge_count() == 3);
  }
  SUBCASE("all zero and all equal") {
    const auto zero = scores_from(Eigen::MatrixXd::Zero(3, 3));
    CHECK(threshold_kin(zero, ThresholdPolicy::gap()).graph.edge_count() == 0);
    CHECK(threshold_kin(zero, ThresholdPolicy::fixed(0.1)).graph.edge_count() == 0);
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 3, 0.7);
    flat.diagonal().setZero();
    try {
      threshold_kin(scores_from(flat), ThresholdPolicy::gap());
      FAIL("no exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Degenerate);
    }
  }
  SUBCASE("fixed is strict") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
    s(0, 1) = s(1, 0) = 0.5;
    CHECK(threshold_kin(scores_from(s), ThresholdPolicy::fixed(0.5)).graph.edge_count() == 0);
    CHECK(threshold_kin(scores_from(s), ThresholdPolicy::fixed(0.49)).graph.edge_count() == 1);
  }
  SUBCASE("unsymmetrized input is refused") {
    auto s = scores_from(Eigen::MatrixXd::Zero(2, 2));
    s.symmetrized = false;
    CHECK_THROWS_AS(threshold_kin(s), Error);
  }
  SUBCASE("parse") {
    CHECK(ThresholdPolicy::parse("gap").kind == ThresholdPolicy::Kind::Gap);
    CHECK(ThresholdPolicy::parse("auto").kind == ThresholdPolicy::Kind::Auto);
    const auto f = ThresholdPolicy::parse("fixed:0.25");
    CHECK(f.kind == ThresholdPolicy::Kind::Fixed);
    CHECK(f.tau == 0.25);
    CHECK(ThresholdPolicy::parse(f.to_string()).tau == 0.25);
    CHECK_THROWS_AS(ThresholdPolicy::parse("fixed:abc"), Error);
    CHECK_THROWS_AS(ThresholdPolicy::parse("fixed:-1"), Error);
    CHECK_THROWS_AS(ThresholdPolicy::parse("median"), Error);
  }
  SUBCASE("significance threshold") {
    // 10 pairs at alpha 0.01: upper 0.001 normal quantile.
    CHECK(significance_threshold(5, 0.01) == doctest::Approx(3.090232306).epsilon(1e-8));
    CHECK_THROWS_AS(significance_threshold(5, 0.0), Error);
  }
}

TEST_CASE("analytic fields recover the kin graph for small trees") {
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    const auto t = random_tree(5 + seed % 8, seed, 2);
    const auto model = GridNetworkModel::uniform(t);
    const auto field = analytic_psd(discretize_zoh(model), model.noise, fft_grid(1024), model.labels());
    const auto sel = threshold_kin(coupling_scores(wiener_filters(field)));
    CHECK(sel.graph == kin_graph_oracle(t));
  }
}

TEST_CASE("gap selection is scale invariant") {
  const auto field = chain_field(5);
  const auto base = threshold_kin(coupling_scores(wiener_filters(field)), ThresholdPolicy::gap());
  for (double c : {1e-3, 7.0, 1e4}) {
    auto scaled = field;
    for (auto& m : scaled.matrices) m *= c;
    const auto sel = threshold_kin(coupling_scores(wiener_filters(scaled)), ThresholdPolicy::gap());
    CHECK(sel.graph == base.graph);
  }
}

TEST_CASE("label permutation equivariance") {
  const auto field = chain_field(5);
  const std::vector<std::size_t> order{3, 1, 4, 0, 2};
  const auto a = threshold_kin(coupling_scores(wiener_filters(field)));
  const auto b = threshold_kin(coupling_scores(wiener_filters(permute(field, order))));
  CHECK(a.graph == b.graph);
}
