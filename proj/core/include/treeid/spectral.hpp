#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "treeid/dynamics.hpp"

namespace treeid {

/// Cross power spectral density matrices on a frequency grid in (0, pi].
/// Entry (i, k) is E[X_i(w) X_k(w)^*], normalized so unit white noise has
/// unit spectrum.
struct SpectralDensityField {
  std::vector<std::string> labels;
  std::vector<double> grid;
  std::vector<Eigen::MatrixXcd> matrices;
  /// Equivalent number of independent averages behind each bin; 0 marks an
  /// exact (model-derived) field with no estimation noise.
  double equivalent_segments = 0.0;
  /// Variance inflation of a sum of per-bin statistics caused by leakage
  /// between neighbouring bins (1 for exact fields and untapered segments).
  double bin_correlation = 1.0;

  /// Symmetrizes every matrix and validates the invariants.
  static SpectralDensityField make(std::vector<std::string> labels, std::vector<double> grid,
                                   std::vector<Eigen::MatrixXcd> matrices,
                                   double equivalent_segments = 0.0, double bin_correlation = 1.0);

  std::size_t node_count() const noexcept { return labels.size(); }
  std::size_t bin_count() const noexcept { return grid.size(); }
  bool is_estimate() const noexcept { return equivalent_segments > 0.0; }

  /// Throws InvalidArgument on a malformed grid or shape mismatch, NonFinite
  /// on non-finite entries and Degenerate when a matrix is not Hermitian
  /// positive semidefinite within tolerance.
  void validate() const;
};

/// Rows and columns reordered so that node order[k] of this field becomes node k.
SpectralDensityField permute(const SpectralDensityField& field, std::span<const std::size_t> order);

enum class Taper { Hann, Rectangular };
enum class DetrendMode { None, Mean, Difference };

struct WelchConfig {
  std::size_t window_len = 1024;
  double overlap = 0.5;
  Taper taper = Taper::Hann;
  DetrendMode detrend = DetrendMode::None;

  static constexpr std::size_t min_segments = 8;

  std::size_t step() const;
  std::size_t segment_count(std::size_t n_samples) const;
  /// Throws InvalidArgument for a bad window/overlap and TooFewSegments when
  /// n_samples supports fewer than min_segments segments.
  void validate(std::size_t n_samples) const;
};

/// FFT bin frequencies 2*pi*f/window_len for f = 1..window_len/2.
std::vector<double> fft_grid(std::size_t window_len);

std::vector<double> taper_window(Taper taper, std::size_t len);

TimeSeriesPanel detrend(const TimeSeriesPanel& panel, DetrendMode mode);

SpectralDensityField welch_cross_psd(const TimeSeriesPanel& panel, const WelchConfig& cfg);

/// Incremental Welch estimator. Samples can be pushed one at a time (so long
/// simulations never materialize the panel) or whole segments can be added.
/// Both routes share the same arithmetic and produce identical fields for
/// identical data. Mean detrending needs the whole panel and is rejected here.
class WelchAccumulator {
 public:
  WelchAccumulator(std::vector<std::string> labels, const WelchConfig& cfg);
  ~WelchAccumulator();
  WelchAccumulator(WelchAccumulator&&) noexcept;
  WelchAccumulator& operator=(WelchAccumulator&&) noexcept;
  WelchAccumulator(const WelchAccumulator&) = delete;
  WelchAccumulator& operator=(const WelchAccumulator&) = delete;

  /// One time step (length m); applies difference detrending if configured.
  void push(std::span<const double> sample);

  /// One segment given as rows = nodes, columns = window_len samples.
  void add_segment(const Eigen::Ref<const RowMajorMatrix>& segment);

  std::size_t segments() const noexcept;

  /// Throws TooFewSegments, NonFinite or Degenerate (a node without power).
  SpectralDensityField finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace treeid
