#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "treeid/graph.hpp"

namespace treeid {

struct SpectralDensityField;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-node first-order autoregressive input p(k) = ar * p(k-1) + sigma * w(k)
/// with w standard normal and independent across nodes.
struct NoiseSpec {
  std::vector<double> sigma;
  std::vector<double> ar;

  static NoiseSpec white(std::size_t nodes, double sigma = 1.0);
  std::size_t size() const noexcept { return sigma.size(); }
  /// Throws InvalidArgument on size mismatch, sigma < 0 or |ar| >= 1.
  void validate(std::size_t nodes) const;
};

/// Linearized swing-equation network on a tree. Per-node vectors follow the
/// node order of topology.graph(); susceptance follows its index_edges().
struct GridNetworkModel {
  TreeTopology topology;
  std::vector<double> susceptance;
  std::vector<double> inertia;
  std::vector<double> damping;
  double grounding = 0.0;
  NoiseSpec noise;
  double dt = 0.1;
  /// Nodes modelled as generators (informational; parameters carry the difference).
  std::vector<std::string> generators;

  /// Unit susceptance/inertia/damping, white unit noise and the default
  /// grounding 0.01 * min(susceptance).
  static GridNetworkModel uniform(TreeTopology topology, double dt = 0.1);

  std::size_t node_count() const noexcept { return topology.node_count(); }
  const std::vector<std::string>& labels() const noexcept { return topology.graph().nodes(); }
  double susceptance_between(std::string_view a, std::string_view b) const;

  /// Throws InvalidArgument when a parameter is out of range.
  void validate() const;
};

double default_grounding(std::span<const double> susceptance);

struct ContinuousStateSpace {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

/// x(k+1) = a x(k) + b p(k), theta(k) = c x(k) with state [theta; f].
struct DiscreteStateSpace {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  double dt = 0.0;

  std::size_t outputs() const noexcept { return static_cast<std::size_t>(c.rows()); }
};

/// m x N sample matrix, one row per node.
struct TimeSeriesPanel {
  std::vector<std::string> labels;
  RowMajorMatrix samples;
  double dt = 1.0;
  std::size_t burn_in_discarded = 0;

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  std::size_t sample_count() const noexcept { return static_cast<std::size_t>(samples.cols()); }
  /// Throws InvalidArgument when labels and rows disagree, N < 2 or a sample
  /// is not finite.
  void validate() const;
};

Eigen::MatrixXd build_laplacian(const GridNetworkModel& model);

ContinuousStateSpace assemble_continuous(const GridNetworkModel& model);

/// Zero-order-hold discretization via the augmented matrix exponential.
DiscreteStateSpace discretize_zoh(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double dt);
DiscreteStateSpace discretize_zoh(const GridNetworkModel& model);

double spectral_radius(const Eigen::MatrixXd& a);

struct SimulationSettings {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
};

/// Receives one output vector (length m) per retained sample.
using SampleSink = std::function<void(std::span<const double>)>;

/// Runs the recurrence from the zero state and hands each retained sample to
/// sink without storing the panel. Throws UnstableSystem when the spectral
/// radius of a is not below one.
void simulate_stream(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                     const SimulationSettings& settings, const SampleSink& sink);

TimeSeriesPanel simulate(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                         const SimulationSettings& settings, std::vector<std::string> labels);

/// Exact output cross spectra G(e^{iw}) Phi_p(w) G(e^{iw})^* on the given
/// grid, in the same normalization as the Welch estimator (unit white noise
/// has unit spectrum).
SpectralDensityField analytic_psd(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                                  std::span<const double> grid, std::vector<std::string> labels);

}  // namespace treeid
