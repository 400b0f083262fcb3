#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "treeid/graph.hpp"
#include "treeid/spectral.hpp"

namespace treeid {

/// Per-frequency multivariate Wiener filters. filters[f](j, i) is the
/// coefficient applied to source i when estimating target j from every other
/// node; the diagonal is zero.
struct WienerFilterBank {
  std::vector<std::string> labels;
  std::vector<double> grid;
  std::vector<Eigen::MatrixXcd> filters;
  /// Ridge added to the diagonal at each bin.
  std::vector<double> ridge;
  double equivalent_segments = 0.0;
  double bin_correlation = 1.0;

  std::size_t node_count() const noexcept { return labels.size(); }
  std::size_t bin_count() const noexcept { return grid.size(); }
};

/// 1e-6 * trace(phi) / m.
double default_ridge(const Eigen::MatrixXcd& phi);

/// Solves W_j (Phi_{jbar jbar} + ridge I) = Phi_{j jbar} for every target j
/// and bin. Without an explicit ridge, default_ridge is used per bin. Throws
/// SingularBlock when a regularized block is numerically singular.
WienerFilterBank wiener_filters(const SpectralDensityField& field,
                                std::optional<double> ridge = std::nullopt);

/// Same filters from one inverse per bin: W_ji = -Q_ji / Q_jj with
/// Q = (Phi + ridge I)^{-1}.
WienerFilterBank inverse_psd_filters(const SpectralDensityField& field,
                                     std::optional<double> ridge = std::nullopt);

enum class ScoreKind {
  /// RMS filter magnitude over the grid; exact zeros mark non-kin pairs.
  Magnitude,
  /// Standardized excess of summed partial coherence over its no-coupling
  /// mean, clipped at zero. Meaningful only for estimated fields.
  Significance,
};

enum class ScoreMethod { Auto, Magnitude, Significance };

struct CouplingScores {
  std::vector<std::string> labels;
  Eigen::MatrixXd scores;
  bool symmetrized = false;
  ScoreKind kind = ScoreKind::Magnitude;

  double at(std::string_view a, std::string_view b) const;
};

/// Auto picks Significance for estimated banks and Magnitude for exact ones.
CouplingScores coupling_scores(const WienerFilterBank& bank, ScoreMethod method = ScoreMethod::Auto);

struct ThresholdPolicy {
  enum class Kind { Auto, Gap, Fixed };

  Kind kind = Kind::Auto;
  double tau = 0.0;
  /// Family-wise false-edge rate used by Auto on significance scores.
  double alpha = 0.01;

  static ThresholdPolicy gap() { return {Kind::Gap}; }
  static ThresholdPolicy fixed(double tau) { return {Kind::Fixed, tau}; }
  /// "auto", "gap" or "fixed:<tau>". Throws InvalidArgument.
  static ThresholdPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct KinSelection {
  UndirectedGraph graph;
  /// Pairs with score strictly above this value are kin.
  double threshold = 0.0;
  /// "fixed", "gap", "gap-fallback", "significance" or "empty".
  std::string rule;
};

/// Ratio-gap cut factor and fallback fraction of the gap policy.
inline constexpr double kGapRatio = 10.0;
inline constexpr double kGapFallbackFraction = 0.05;

/// One-sided Bonferroni cut for the m(m-1)/2 pairwise significance scores.
double significance_threshold(std::size_t nodes, double alpha);

/// Thresholds the pair scores into the kin graph. Throws Degenerate under the
/// gap policy when every score is equal and nonzero.
KinSelection threshold_kin(const CouplingScores& scores, const ThresholdPolicy& policy = {});

}  // namespace treeid
