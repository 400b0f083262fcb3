#include "treeid/wiener.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "treeid/error.hpp"

namespace treeid {

namespace {

constexpr double kMinRcond = 1e-14;

double ridge_for(const Eigen::MatrixXcd& phi, std::optional<double> ridge) {
  if (ridge) {
    if (!(*ridge >= 0.0) || !std::isfinite(*ridge)) {
      throw Error(ErrorCode::InvalidArgument, "ridge must be finite and non-negative");
    }
    return *ridge;
  }
  return default_ridge(phi);
}

WienerFilterBank empty_bank(const SpectralDensityField& field) {
  if (field.node_count() < 2) {
    throw Error(ErrorCode::InvalidArgument, "Wiener filtering needs at least two nodes");
  }
  WienerFilterBank bank;
  bank.labels = field.labels;
  bank.grid = field.grid;
  bank.equivalent_segments = field.equivalent_segments;
  bank.bin_correlation = field.bin_correlation;
  bank.filters.reserve(field.bin_count());
  bank.ridge.reserve(field.bin_count());
  return bank;
}

Eigen::LLT<Eigen::MatrixXcd> checked_cholesky(const Eigen::MatrixXcd& block, double w) {
  Eigen::LLT<Eigen::MatrixXcd> llt(block);
  if (llt.info() != Eigen::Success || !(llt.rcond() > kMinRcond)) {
    throw Error(ErrorCode::SingularBlock,
                "regularized spectral block singular at w = " + std::to_string(w));
  }
  return llt;
}

}  // namespace

double default_ridge(const Eigen::MatrixXcd& phi) {
  return 1e-6 * phi.trace().real() / static_cast<double>(phi.rows());
}

WienerFilterBank wiener_filters(const SpectralDensityField& field, std::optional<double> ridge) {
  WienerFilterBank bank = empty_bank(field);
  const auto m = static_cast<Eigen::Index>(field.node_count());
  std::vector<Eigen::Index> others(static_cast<std::size_t>(m - 1));

  for (std::size_t f = 0; f < field.bin_count(); ++f) {
    const auto& phi = field.matrices[f];
    const double eps = ridge_for(phi, ridge);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      std::iota(others.begin(), others.begin() + j, Eigen::Index{0});
      std::iota(others.begin() + j, others.end(), j + 1);
      Eigen::MatrixXcd block = phi(others, others);
      block.diagonal().array() += eps;
      // W_j A = Phi_{j,jbar} with A Hermitian  <=>  A W_j^* = Phi_{jbar,j}
      const Eigen::VectorXcd rhs = phi(others, j);
      const Eigen::VectorXcd y = checked_cholesky(block, field.grid[f]).solve(rhs);
      for (Eigen::Index k = 0; k < m - 1; ++k) w(j, others[static_cast<std::size_t>(k)]) = std::conj(y(k));
    }
    bank.filters.push_back(std::move(w));
    bank.ridge.push_back(eps);
  }
  return bank;
}

WienerFilterBank inverse_psd_filters(const SpectralDensityField& field,
                                     std::optional<double> ridge) {
  WienerFilterBank bank = empty_bank(field);
  const auto m = static_cast<Eigen::Index>(field.node_count());
  for (std::size_t f = 0; f < field.bin_count(); ++f) {
    Eigen::MatrixXcd reg = field.matrices[f];
    const double eps = ridge_for(reg, ridge);
    reg.diagonal().array() += eps;
    const Eigen::MatrixXcd q =
        checked_cholesky(reg, field.grid[f]).solve(Eigen::MatrixXcd::Identity(m, m));
    Eigen::MatrixXcd w(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      w.row(j) = -q.row(j) / q(j, j);
      w(j, j) = 0.0;
    }
    bank.filters.push_back(std::move(w));
    bank.ridge.push_back(eps);
  }
  return bank;
}

double CouplingScores::at(std::string_view a, std::string_view b) const {
  auto index = [&](std::string_view l) {
    auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw Error(ErrorCode::UnknownNode, "unknown node " + std::string(l));
    return static_cast<Eigen::Index>(it - labels.begin());
  };
  return scores(index(a), index(b));
}

namespace {

CouplingScores magnitude_scores(const WienerFilterBank& bank) {
  const auto m = static_cast<Eigen::Index>(bank.node_count());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
  for (const auto& w : bank.filters) sum += w.cwiseAbs2();
  Eigen::MatrixXd rms = (sum / static_cast<double>(std::max<std::size_t>(bank.bin_count(), 1)))
                            .cwiseSqrt();
  rms.diagonal().setZero();
  return {bank.labels, rms.cwiseMax(rms.transpose()), true, ScoreKind::Magnitude};
}

// Under no coupling the estimated squared partial coherence behaves like
// Beta(1, b) with b = K_eff - m + 1; the statistic sums it over bins and
// standardizes with the leakage-inflated variance of that sum.
CouplingScores significance_scores(const WienerFilterBank& bank) {
  const auto m = static_cast<Eigen::Index>(bank.node_count());
  const double b = bank.equivalent_segments - static_cast<double>(m) + 1.0;
  if (!(b > 1.0)) {
    throw Error(ErrorCode::TooFewSegments,
                "significance scores need more equivalent segments than nodes");
  }
  const double mean = 1.0 / (b + 1.0);
  const double var = b / ((b + 1.0) * (b + 1.0) * (b + 2.0));
  const auto bins = static_cast<double>(bank.bin_count());

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
  for (const auto& w : bank.filters) {
    const Eigen::MatrixXd mag = w.cwiseAbs();
    sum += mag.cwiseProduct(mag.transpose()).cwiseMin(1.0);
  }
  Eigen::MatrixXd z =
      ((sum.array() - bins * mean) / std::sqrt(bins * bank.bin_correlation * var)).cwiseMax(0.0);
  z.diagonal().setZero();
  return {bank.labels, z, true, ScoreKind::Significance};
}

}  // namespace

CouplingScores coupling_scores(const WienerFilterBank& bank, ScoreMethod method) {
  if (method == ScoreMethod::Auto) {
    method = bank.equivalent_segments > 0.0 ? ScoreMethod::Significance : ScoreMethod::Magnitude;
  }
  return method == ScoreMethod::Magnitude ? magnitude_scores(bank) : significance_scores(bank);
}

ThresholdPolicy ThresholdPolicy::parse(std::string_view text) {
  if (text == "auto") return {};
  if (text == "gap") return gap();
  constexpr std::string_view prefix = "fixed:";
  if (text.starts_with(prefix)) {
    const std::string value(text.substr(prefix.size()));
    try {
      std::size_t used = 0;
      const double tau = std::stod(value, &used);
      if (used == value.size() && std::isfinite(tau) && tau >= 0.0) return fixed(tau);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::InvalidArgument,
              "threshold policy must be auto, gap or fixed:<tau>, got '" + std::string(text) + "'");
}

std::string ThresholdPolicy::to_string() const {
  switch (kind) {
    case Kind::Auto: return "auto";
    case Kind::Gap: return "gap";
    case Kind::Fixed: {
      std::ostringstream os;
      os.precision(17);
      os << "fixed:" << tau;
      return os.str();
    }
  }
  return "auto";
}

double significance_threshold(std::size_t nodes, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
  const double pairs = std::max(1.0, 0.5 * static_cast<double>(nodes) *
                                         static_cast<double>(nodes > 0 ? nodes - 1 : 0));
  const boost::math::normal standard;
  return boost::math::quantile(boost::math::complement(standard, alpha / pairs));
}

namespace {

KinSelection select_above(const CouplingScores& scores, double tau, std::string rule) {
  const auto m = static_cast<Eigen::Index>(scores.labels.size());
  std::vector<IndexEdge> edges;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (scores.scores(i, j) > tau) {
        edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return {UndirectedGraph::from_index_edges(scores.labels, edges), tau, std::move(rule)};
}

KinSelection gap_cut(const CouplingScores& scores) {
  const auto m = static_cast<Eigen::Index>(scores.labels.size());
  std::vector<double> values;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) values.push_back(scores.scores(i, j));
  }
  if (values.empty() || *std::max_element(values.begin(), values.end()) <= 0.0) {
    return select_above(scores, 0.0, "empty");
  }
  if (values.size() > 1 && std::adjacent_find(values.begin(), values.end(),
                                              std::not_equal_to<>()) == values.end()) {
    throw Error(ErrorCode::Degenerate, "all pair scores are equal; no gap to cut at");
  }

  // Ratios only between positive scores: zeros sit below every cut anyway.
  std::vector<double> positive;
  std::copy_if(values.begin(), values.end(), std::back_inserter(positive),
               [](double v) { return v > 0.0; });
  std::sort(positive.begin(), positive.end(), std::greater<>());
  double best_ratio = kGapRatio;
  std::optional<std::size_t> cut;
  for (std::size_t k = 0; k + 1 < positive.size(); ++k) {
    const double ratio = positive[k] / positive[k + 1];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      cut = k;
    }
  }
  if (cut) {
    return select_above(scores, std::sqrt(positive[*cut] * positive[*cut + 1]), "gap");
  }
  return select_above(scores, kGapFallbackFraction * positive.front(), "gap-fallback");
}

}  // namespace

KinSelection threshold_kin(const CouplingScores& scores, const ThresholdPolicy& policy) {
  if (!scores.symmetrized) {
    throw Error(ErrorCode::InvalidArgument, "threshold_kin expects symmetrized scores");
  }
  switch (policy.kind) {
    case ThresholdPolicy::Kind::Fixed:
      return select_above(scores, policy.tau, "fixed");
    case ThresholdPolicy::Kind::Gap:
      return gap_cut(scores);
    case ThresholdPolicy::Kind::Auto:
      if (scores.kind == ScoreKind::Significance) {
        return select_above(scores, significance_threshold(scores.labels.size(), policy.alpha),
                            "significance");
      }
      return gap_cut(scores);
  }
  return gap_cut(scores);
}

}  // namespace treeid
