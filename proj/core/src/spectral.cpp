#include "treeid/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fftw3.h>

#include "treeid/error.hpp"

namespace treeid {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kPsdTol = 1e-8;

}  // namespace

// ---------------------------------------------------------------------------
// SpectralDensityField

SpectralDensityField SpectralDensityField::make(std::vector<std::string> labels,
                                                std::vector<double> grid,
                                                std::vector<Eigen::MatrixXcd> matrices,
                                                double equivalent_segments,
                                                double bin_correlation) {
  for (auto& m : matrices) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "spectral matrix not square");
    const Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
    m = herm;
    m.diagonal() = m.diagonal().real().cast<std::complex<double>>();
  }
  SpectralDensityField field{std::move(labels), std::move(grid), std::move(matrices),
                             equivalent_segments, bin_correlation};
  field.validate();
  return field;
}

void SpectralDensityField::validate() const {
  const auto m = static_cast<Eigen::Index>(labels.size());
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "spectral field without nodes");
  if (grid.empty() || grid.size() != matrices.size()) {
    throw Error(ErrorCode::InvalidArgument, "grid and matrix counts differ");
  }
  for (std::size_t f = 0; f < grid.size(); ++f) {
    if (!(grid[f] > 0.0) || grid[f] > std::numbers::pi * (1.0 + 1e-12) ||
        (f > 0 && !(grid[f] > grid[f - 1]))) {
      throw Error(ErrorCode::InvalidArgument,
                  "grid must be strictly increasing inside (0, pi]");
    }
  }
  if (equivalent_segments < 0.0 || !(bin_correlation >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid estimation metadata");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig;
  for (std::size_t f = 0; f < matrices.size(); ++f) {
    const auto& phi = matrices[f];
    if (phi.rows() != m || phi.cols() != m) {
      throw Error(ErrorCode::InvalidArgument, "spectral matrix size differs from label count");
    }
    if (!phi.allFinite()) throw Error(ErrorCode::NonFinite, "spectral matrix not finite");
    const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
    if ((phi - phi.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol * scale) {
      throw Error(ErrorCode::Degenerate, "spectral matrix not Hermitian");
    }
    eig.compute(phi, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (ev.minCoeff() < -kPsdTol * std::max(1.0, ev.maxCoeff())) {
      throw Error(ErrorCode::Degenerate, "spectral matrix at w = " + std::to_string(grid[f]) +
                                             " is not positive semidefinite");
    }
  }
}

SpectralDensityField permute(const SpectralDensityField& field,
                             std::span<const std::size_t> order) {
  const std::size_t m = field.node_count();
  if (order.size() != m) throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  SpectralDensityField out = field;
  for (std::size_t k = 0; k < m; ++k) out.labels[k] = field.labels.at(order[k]);
  for (std::size_t f = 0; f < field.bin_count(); ++f) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        out.matrices[f](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            field.matrices[f](static_cast<Eigen::Index>(order[a]),
                              static_cast<Eigen::Index>(order[b]));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration helpers

std::size_t WelchConfig::step() const {
  const auto hop = window_len - static_cast<std::size_t>(std::floor(overlap * window_len));
  return std::max<std::size_t>(hop, 1);
}

std::size_t WelchConfig::segment_count(std::size_t n_samples) const {
  if (n_samples < window_len || window_len == 0) return 0;
  return (n_samples - window_len) / step() + 1;
}

void WelchConfig::validate(std::size_t n_samples) const {
  if (window_len < 2 || !std::has_single_bit(window_len)) {
    throw Error(ErrorCode::InvalidArgument, "window length must be a power of two >= 2");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "overlap must lie in [0, 1)");
  }
  const std::size_t k = segment_count(n_samples);
  if (k < min_segments) {
    throw Error(ErrorCode::TooFewSegments,
                std::to_string(n_samples) + " samples give " + std::to_string(k) +
                    " segments of length " + std::to_string(window_len) + "; need " +
                    std::to_string(min_segments));
  }
}

std::vector<double> fft_grid(std::size_t window_len) {
  std::vector<double> grid;
  grid.reserve(window_len / 2);
  for (std::size_t f = 1; f <= window_len / 2; ++f) {
    grid.push_back(2.0 * std::numbers::pi * static_cast<double>(f) /
                   static_cast<double>(window_len));
  }
  return grid;
}

std::vector<double> taper_window(Taper taper, std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (taper == Taper::Hann) {
    for (std::size_t n = 0; n < len; ++n) {
      w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                   static_cast<double>(len)));
    }
  }
  return w;
}

TimeSeriesPanel detrend(const TimeSeriesPanel& panel, DetrendMode mode) {
  if (panel.sample_count() < 2) throw Error(ErrorCode::InvalidArgument, "detrend needs N >= 2");
  TimeSeriesPanel out;
  out.labels = panel.labels;
  out.dt = panel.dt;
  out.burn_in_discarded = panel.burn_in_discarded;
  switch (mode) {
    case DetrendMode::None:
      out.samples = panel.samples;
      break;
    case DetrendMode::Mean:
      out.samples = panel.samples.colwise() - panel.samples.rowwise().mean();
      break;
    case DetrendMode::Difference: {
      const Eigen::Index n = panel.samples.cols();
      out.samples = panel.samples.rightCols(n - 1) - panel.samples.leftCols(n - 1);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WelchAccumulator

namespace {

// Segments are transformed one at a time but folded into the accumulators in
// batches, turning m x m rank-one updates into rank-k updates.
constexpr Eigen::Index kBatch = 64;

// Correlation-adjusted number of independent segments for overlapping windows.
double equivalent_segment_count(const std::vector<double>& w, std::size_t step, std::size_t k) {
  double power = 0.0;
  for (double v : w) power += v * v;
  double penalty = 0.0;
  for (std::size_t l = 1; l < k && l * step < w.size(); ++l) {
    double lagged = 0.0;
    for (std::size_t n = 0; n + l * step < w.size(); ++n) lagged += w[n] * w[n + l * step];
    const double c = (lagged * lagged) / (power * power);
    penalty += (1.0 - static_cast<double>(l) / static_cast<double>(k)) * c;
  }
  return static_cast<double>(k) / (1.0 + 2.0 * penalty);
}

// Variance inflation of a sum of white-noise periodogram bins caused by taper leakage.
double neighbour_bin_correlation(const std::vector<double>& w) {
  const std::size_t len = w.size();
  double power = 0.0;
  for (double v : w) power += v * v;
  double sum = 0.0;
  const std::size_t max_lag = std::min<std::size_t>(len / 2, 32);
  for (std::size_t l = 1; l < max_lag; ++l) {
    std::complex<double> rho = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
      rho += w[n] * w[n] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(l * n) /
                                 static_cast<double>(len));
    }
    sum += std::norm(rho / power);
  }
  return 1.0 + 2.0 * sum;
}

}  // namespace

struct WelchAccumulator::Impl {
  Impl(std::vector<std::string> l, const WelchConfig& c)
      : labels(std::move(l)),
        cfg(c),
        m(static_cast<Eigen::Index>(labels.size())),
        len(c.window_len),
        bins(static_cast<Eigen::Index>(c.window_len / 2)),
        window(taper_window(c.taper, c.window_len)) {
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "Welch estimate without nodes");
    c.validate(std::numeric_limits<std::size_t>::max() / 2);
    for (double v : window) window_power += v * v;
    in = fftw_alloc_real(len);
    out = fftw_alloc_complex(len / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
    acc.assign(static_cast<std::size_t>(bins), Eigen::MatrixXcd::Zero(m, m));
    batch.assign(static_cast<std::size_t>(bins), Eigen::MatrixXcd::Zero(m, kBatch));
    pending.resize(m, static_cast<Eigen::Index>(len));
    previous.resize(m);
  }

  ~Impl() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }

  void add_segment(const Eigen::Ref<const RowMajorMatrix>& seg) {
    if (seg.rows() != m || seg.cols() != static_cast<Eigen::Index>(len)) {
      throw Error(ErrorCode::InvalidArgument, "segment shape does not match the estimator");
    }
    if (!seg.allFinite()) throw Error(ErrorCode::NonFinite, "segment contains non-finite samples");
    for (Eigen::Index i = 0; i < m; ++i) {
      for (std::size_t n = 0; n < len; ++n) {
        in[n] = window[n] * seg(i, static_cast<Eigen::Index>(n));
      }
      fftw_execute(plan);
      for (Eigen::Index f = 0; f < bins; ++f) {
        batch[static_cast<std::size_t>(f)](i, fill) = {out[f + 1][0], out[f + 1][1]};
      }
    }
    ++segments;
    if (++fill == kBatch) flush();
  }

  void flush() {
    if (fill == 0) return;
    for (Eigen::Index f = 0; f < bins; ++f) {
      const auto k = static_cast<std::size_t>(f);
      acc[k].selfadjointView<Eigen::Lower>().rankUpdate(batch[k].leftCols(fill));
    }
    fill = 0;
  }

  void push(std::span<const double> sample) {
    if (static_cast<Eigen::Index>(sample.size()) != m) {
      throw Error(ErrorCode::InvalidArgument, "sample length does not match node count");
    }
    const Eigen::Map<const Eigen::VectorXd> x(sample.data(), m);
    if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite sample");
    Eigen::Index col = static_cast<Eigen::Index>(pending_count);
    switch (cfg.detrend) {
      case DetrendMode::None:
        pending.col(col) = x;
        break;
      case DetrendMode::Difference:
        if (!has_previous) {
          previous = x;
          has_previous = true;
          return;
        }
        pending.col(col) = x - previous;
        previous = x;
        break;
      case DetrendMode::Mean:
        throw Error(ErrorCode::InvalidArgument,
                    "mean detrending needs the whole panel; use welch_cross_psd");
    }
    if (++pending_count == len) {
      add_segment(pending);
      const std::size_t step = cfg.step();
      const std::size_t keep = step < len ? len - step : 0;
      if (keep > 0) {
        const RowMajorMatrix tail = pending.rightCols(static_cast<Eigen::Index>(keep));
        pending.leftCols(static_cast<Eigen::Index>(keep)) = tail;
      }
      pending_count = keep;
    }
  }

  SpectralDensityField finish() {
    flush();
    if (segments < WelchConfig::min_segments) {
      throw Error(ErrorCode::TooFewSegments,
                  std::to_string(segments) + " segments accumulated; need " +
                      std::to_string(WelchConfig::min_segments));
    }
    const double scale = 1.0 / (static_cast<double>(segments) * window_power);
    std::vector<Eigen::MatrixXcd> matrices;
    matrices.reserve(acc.size());
    Eigen::VectorXd total_power = Eigen::VectorXd::Zero(m);
    for (const auto& a : acc) {
      Eigen::MatrixXcd phi = a.selfadjointView<Eigen::Lower>();
      phi *= scale;
      total_power += phi.diagonal().real();
      matrices.push_back(std::move(phi));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(total_power(i) > 0.0)) {
        throw Error(ErrorCode::Degenerate,
                    "node " + labels[static_cast<std::size_t>(i)] + " carries no power");
      }
    }
    const double k_eff = equivalent_segment_count(window, cfg.step(), segments);
    return SpectralDensityField::make(labels, fft_grid(len), std::move(matrices), k_eff,
                                      neighbour_bin_correlation(window));
  }

  std::vector<std::string> labels;
  WelchConfig cfg;
  Eigen::Index m;
  std::size_t len;
  Eigen::Index bins;
  std::vector<double> window;
  double window_power = 0.0;

  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  std::vector<Eigen::MatrixXcd> acc;
  std::vector<Eigen::MatrixXcd> batch;
  Eigen::Index fill = 0;
  std::size_t segments = 0;

  RowMajorMatrix pending;
  std::size_t pending_count = 0;
  Eigen::VectorXd previous;
  bool has_previous = false;
};

WelchAccumulator::WelchAccumulator(std::vector<std::string> labels, const WelchConfig& cfg)
    : impl_(std::make_unique<Impl>(std::move(labels), cfg)) {}
WelchAccumulator::~WelchAccumulator() = default;
WelchAccumulator::WelchAccumulator(WelchAccumulator&&) noexcept = default;
WelchAccumulator& WelchAccumulator::operator=(WelchAccumulator&&) noexcept = default;

void WelchAccumulator::push(std::span<const double> sample) { impl_->push(sample); }

void WelchAccumulator::add_segment(const Eigen::Ref<const RowMajorMatrix>& segment) {
  impl_->add_segment(segment);
}

std::size_t WelchAccumulator::segments() const noexcept { return impl_->segments; }

SpectralDensityField WelchAccumulator::finish() { return impl_->finish(); }

SpectralDensityField welch_cross_psd(const TimeSeriesPanel& panel, const WelchConfig& cfg) {
  panel.validate();
  const TimeSeriesPanel data = detrend(panel, cfg.detrend);
  cfg.validate(data.sample_count());

  WelchConfig plain = cfg;
  plain.detrend = DetrendMode::None;
  WelchAccumulator acc(data.labels, plain);
  const std::size_t k = cfg.segment_count(data.sample_count());
  const auto len = static_cast<Eigen::Index>(cfg.window_len);
  for (std::size_t s = 0; s < k; ++s) {
    acc.add_segment(data.samples.middleCols(static_cast<Eigen::Index>(s * cfg.step()), len));
  }
  return acc.finish();
}

}  // namespace treeid
