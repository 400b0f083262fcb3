#include "treeid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "treeid/error.hpp"
#include "treeid/spectral.hpp"

namespace treeid {

NoiseSpec NoiseSpec::white(std::size_t nodes, double sigma) {
  return NoiseSpec{std::vector<double>(nodes, sigma), std::vector<double>(nodes, 0.0)};
}

void NoiseSpec::validate(std::size_t nodes) const {
  if (sigma.size() != nodes || ar.size() != nodes) {
    throw Error(ErrorCode::InvalidArgument, "noise spec must have one entry per node");
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!std::isfinite(sigma[i]) || sigma[i] < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "noise sigma must be finite and non-negative");
    }
    if (!std::isfinite(ar[i]) || std::abs(ar[i]) >= 1.0) {
      throw Error(ErrorCode::InvalidArgument, "noise ar coefficient must lie in (-1, 1)");
    }
  }
}

double default_grounding(std::span<const double> susceptance) {
  if (susceptance.empty()) return 0.0;
  return 0.01 * *std::min_element(susceptance.begin(), susceptance.end());
}

GridNetworkModel GridNetworkModel::uniform(TreeTopology topology, double dt) {
  const std::size_t m = topology.node_count();
  const std::size_t edges = topology.graph().edge_count();
  GridNetworkModel model;
  model.topology = std::move(topology);
  model.susceptance.assign(edges, 1.0);
  model.inertia.assign(m, 1.0);
  model.damping.assign(m, 1.0);
  model.grounding = default_grounding(model.susceptance);
  model.noise = NoiseSpec::white(m);
  model.dt = dt;
  return model;
}

double GridNetworkModel::susceptance_between(std::string_view a, std::string_view b) const {
  const auto& g = topology.graph();
  const IndexEdge key(g.index_of(a), g.index_of(b));
  const auto& edges = g.index_edges();
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) return 0.0;
  return susceptance[static_cast<std::size_t>(it - edges.begin())];
}

void GridNetworkModel::validate() const {
  const std::size_t m = node_count();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "model has no nodes");
  if (susceptance.size() != topology.graph().edge_count()) {
    throw Error(ErrorCode::InvalidArgument, "one susceptance per edge required");
  }
  if (inertia.size() != m || damping.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "one inertia and damping value per node required");
  }
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!std::all_of(susceptance.begin(), susceptance.end(), positive)) {
    throw Error(ErrorCode::InvalidArgument, "susceptances must be positive");
  }
  if (!std::all_of(inertia.begin(), inertia.end(), positive) ||
      !std::all_of(damping.begin(), damping.end(), positive)) {
    throw Error(ErrorCode::InvalidArgument, "inertia and damping must be positive");
  }
  if (!std::isfinite(grounding) || grounding < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "grounding must be non-negative");
  }
  if (!positive(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  noise.validate(m);
}

void TimeSeriesPanel::validate() const {
  if (labels.size() != node_count()) {
    throw Error(ErrorCode::InvalidArgument, "panel labels do not match its rows");
  }
  if (sample_count() < 2) throw Error(ErrorCode::InvalidArgument, "panel needs N >= 2 samples");
  if (!samples.allFinite()) throw Error(ErrorCode::NonFinite, "panel contains non-finite samples");
}

Eigen::MatrixXd build_laplacian(const GridNetworkModel& model) {
  const auto& g = model.topology.graph();
  const auto m = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
  const auto& edges = g.index_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto u = static_cast<Eigen::Index>(edges[e].u);
    const auto v = static_cast<Eigen::Index>(edges[e].v);
    const double b = model.susceptance.at(e);
    lap(u, v) -= b;
    lap(v, u) -= b;
    lap(u, u) += b;
    lap(v, v) += b;
  }
  lap.diagonal().array() += model.grounding;
  return lap;
}

ContinuousStateSpace assemble_continuous(const GridNetworkModel& model) {
  model.validate();
  const auto m = static_cast<Eigen::Index>(model.node_count());
  const Eigen::VectorXd inv_inertia =
      Eigen::Map<const Eigen::VectorXd>(model.inertia.data(), m).cwiseInverse();
  const Eigen::Map<const Eigen::VectorXd> damping(model.damping.data(), m);

  ContinuousStateSpace ss;
  ss.a = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  ss.a.topRightCorner(m, m).setIdentity();
  ss.a.bottomLeftCorner(m, m) = -(inv_inertia.asDiagonal() * build_laplacian(model));
  ss.a.bottomRightCorner(m, m) = (-inv_inertia.cwiseProduct(damping)).asDiagonal();
  ss.b = Eigen::MatrixXd::Zero(2 * m, m);
  ss.b.bottomRows(m) = inv_inertia.asDiagonal();
  return ss;
}

DiscreteStateSpace discretize_zoh(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "sampling interval must be positive");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (a.cols() != n || b.rows() != n) {
    throw Error(ErrorCode::InvalidArgument, "state-space dimensions disagree");
  }
  // exp([[A, B], [0, 0]] dt) = [[A_d, B_d], [0, I]]
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * dt;
  aug.topRightCorner(n, m) = b * dt;
  const Eigen::MatrixXd e = aug.exp();
  if (!e.allFinite()) throw Error(ErrorCode::NonFinite, "matrix exponential overflowed");

  DiscreteStateSpace dss;
  dss.a = e.topLeftCorner(n, n);
  dss.b = e.topRightCorner(n, m);
  const Eigen::Index outputs = n / 2;
  dss.c = Eigen::MatrixXd::Zero(outputs, n);
  dss.c.leftCols(outputs).setIdentity();
  dss.dt = dt;
  return dss;
}

DiscreteStateSpace discretize_zoh(const GridNetworkModel& model) {
  const auto ss = assemble_continuous(model);
  return discretize_zoh(ss.a, ss.b, model.dt);
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

void require_stable(const DiscreteStateSpace& dss) {
  const double rho = spectral_radius(dss.a);
  if (!(rho < 1.0)) {
    throw Error(ErrorCode::UnstableSystem,
                "spectral radius " + std::to_string(rho) + " is not below one");
  }
}

std::mt19937_64 node_stream(std::uint64_t seed, std::size_t node) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), 0x7ee1du};
  return std::mt19937_64(seq);
}

}  // namespace

void simulate_stream(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                     const SimulationSettings& settings, const SampleSink& sink) {
  const auto inputs = static_cast<std::size_t>(dss.b.cols());
  const auto outputs = dss.outputs();
  noise.validate(inputs);
  require_stable(dss);

  std::vector<std::mt19937_64> streams;
  streams.reserve(inputs);
  for (std::size_t i = 0; i < inputs; ++i) streams.push_back(node_stream(settings.seed, i));
  std::vector<std::normal_distribution<double>> normals(inputs);

  const Eigen::Index n = dss.a.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd next(n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inputs));
  Eigen::VectorXd y(static_cast<Eigen::Index>(outputs));

  const std::size_t total = settings.burn_in + settings.n_samples;
  for (std::size_t k = 0; k < total; ++k) {
    if (k >= settings.burn_in) {
      y.noalias() = dss.c * x;
      sink(std::span<const double>(y.data(), outputs));
    }
    for (std::size_t i = 0; i < inputs; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      p(ii) = noise.ar[i] * p(ii) + noise.sigma[i] * normals[i](streams[i]);
    }
    next.noalias() = dss.a * x;
    next.noalias() += dss.b * p;
    x.swap(next);
  }
}

TimeSeriesPanel simulate(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                         const SimulationSettings& settings, std::vector<std::string> labels) {
  if (settings.n_samples < 2) throw Error(ErrorCode::InvalidArgument, "simulate needs N >= 2");
  if (labels.size() != dss.outputs()) {
    throw Error(ErrorCode::InvalidArgument, "one label per output required");
  }
  TimeSeriesPanel panel;
  panel.labels = std::move(labels);
  panel.samples.resize(static_cast<Eigen::Index>(dss.outputs()),
                       static_cast<Eigen::Index>(settings.n_samples));
  panel.dt = dss.dt;
  panel.burn_in_discarded = settings.burn_in;
  Eigen::Index col = 0;
  simulate_stream(dss, noise, settings, [&](std::span<const double> y) {
    panel.samples.col(col++) = Eigen::Map<const Eigen::VectorXd>(y.data(), panel.samples.rows());
  });
  if (!panel.samples.allFinite()) throw Error(ErrorCode::NonFinite, "simulation diverged");
  return panel;
}

SpectralDensityField analytic_psd(const DiscreteStateSpace& dss, const NoiseSpec& noise,
                                  std::span<const double> grid, std::vector<std::string> labels) {
  const Eigen::Index n = dss.a.rows();
  const auto inputs = static_cast<std::size_t>(dss.b.cols());
  noise.validate(inputs);
  if (labels.size() != dss.outputs()) {
    throw Error(ErrorCode::InvalidArgument, "one label per output required");
  }
  require_stable(dss);

  const Eigen::MatrixXcd a = dss.a.cast<std::complex<double>>();
  const Eigen::MatrixXcd b = dss.b.cast<std::complex<double>>();
  const Eigen::MatrixXcd c = dss.c.cast<std::complex<double>>();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);

  std::vector<Eigen::MatrixXcd> matrices;
  matrices.reserve(grid.size());
  Eigen::VectorXd input_psd(static_cast<Eigen::Index>(inputs));
  for (double w : grid) {
    const std::complex<double> z = std::polar(1.0, w);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(z * eye - a);
    if (!(lu.rcond() > 1e-14)) {
      throw Error(ErrorCode::SingularResolvent, "resolvent singular at w = " + std::to_string(w));
    }
    const Eigen::MatrixXcd g = c * lu.solve(b);
    for (std::size_t i = 0; i < inputs; ++i) {
      const double s = noise.sigma[i];
      input_psd(static_cast<Eigen::Index>(i)) =
          s * s / std::norm(1.0 - noise.ar[i] * std::conj(z));
    }
    matrices.push_back(g * input_psd.asDiagonal() * g.adjoint());
  }
  return SpectralDensityField::make(std::move(labels), {grid.begin(), grid.end()},
                                    std::move(matrices));
}

}  // namespace treeid
