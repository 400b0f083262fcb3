#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "treeid/dynamics.hpp"
#include "treeid/error.hpp"
#include "treeid/spectral.hpp"

using namespace treeid;

namespace {

GridNetworkModel chain_model(std::size_t n, double grounding) {
  auto model = GridNetworkModel::uniform(validate_tree(oracle::chain(n)));
  model.grounding = grounding;
  return model;
}

std::vector<std::complex<double>> sorted_eigs(const Eigen::MatrixXd& a) {
  const Eigen::VectorXcd ev = a.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

}  // namespace

TEST_CASE("build_laplacian") {
  const auto l0 = build_laplacian(chain_model(3, 0.0));
  Eigen::Matrix3d expect;
  expect << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((l0 - expect).norm() == 0.0);
  CHECK(l0.rowwise().sum().norm() == 0.0);
  CHECK(std::abs(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l0).eigenvalues()(0)) < 1e-12);

  const auto l1 = build_laplacian(chain_model(3, 0.01));
  CHECK((l1 - expect - 0.01 * Eigen::Matrix3d::Identity()).norm() < 1e-15);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(l1).info() == Eigen::Success);
  CHECK((l1 - l1.transpose()).norm() == 0.0);
}

TEST_CASE("default model parameters") {
  const auto model = GridNetworkModel::uniform(validate_tree(oracle::chain(4)));
  CHECK(model.dt == doctest::Approx(0.1));
  CHECK(model.grounding == doctest::Approx(0.01));
  CHECK(model.susceptance_between("2", "3") == 1.0);
  CHECK(model.susceptance_between("1", "3") == 0.0);
  CHECK_THROWS_AS(model.susceptance_between("1", "9"), Error);
  auto bad = model;
  bad.inertia[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = model;
  bad.noise.ar[1] = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("assemble_continuous") {
  const auto ss = assemble_continuous(chain_model(3, 0.01));
  CHECK(ss.a.topRightCorner(3, 3).isIdentity(0.0));
  CHECK(ss.a.topLeftCorner(3, 3).isZero(0.0));
  CHECK(ss.b.topRows(3).isZero(0.0));
  double max_re = -1e300;
  for (const auto& e : sorted_eigs(ss.a)) max_re = std::max(max_re, e.real());
  CHECK(max_re < 0.0);

  const auto ss0 = assemble_continuous(chain_model(3, 0.0));
  double min_abs = 1e300;
  for (const auto& e : sorted_eigs(ss0.a)) min_abs = std::min(min_abs, std::abs(e));
  CHECK(min_abs < 1e-10);
}

TEST_CASE("discretize_zoh") {
  SUBCASE("scalar decay") {
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a << -1.0;
    b << 1.0;
    const auto d = discretize_zoh(a, b, 0.3);
    CHECK(d.a(0, 0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-14));
    CHECK(d.b(0, 0) == doctest::Approx(1.0 - std::exp(-0.3)).epsilon(1e-14));
  }
  SUBCASE("small step approaches identity") {
    const auto ss = assemble_continuous(chain_model(3, 0.01));
    const auto d = discretize_zoh(ss.a, ss.b, 1e-9);
    CHECK((d.a - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-8);
  }
  SUBCASE("eigenvalues map through the exponential") {
    const auto ss = assemble_continuous(chain_model(3, 0.01));
    const double dt = 0.1;
    const auto d = discretize_zoh(ss.a, ss.b, dt);
    const Eigen::VectorXcd cont = ss.a.eigenvalues();
    std::vector<std::complex<double>> mapped;
    for (Eigen::Index i = 0; i < cont.size(); ++i) mapped.push_back(std::exp(cont(i) * dt));
    std::sort(mapped.begin(), mapped.end(), [](auto x, auto y) {
      return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    const auto disc = sorted_eigs(d.a);
    REQUIRE(disc.size() == mapped.size());
    for (std::size_t i = 0; i < disc.size(); ++i) CHECK(std::abs(disc[i] - mapped[i]) < 1e-10);
    CHECK(spectral_radius(d.a) < 1.0);
  }
  SUBCASE("output selector picks the angle block") {
    const auto d = discretize_zoh(chain_model(3, 0.01));
    CHECK(d.c.leftCols(3).isIdentity(0.0));
    CHECK(d.c.rightCols(3).isZero(0.0));
    CHECK(d.outputs() == 3);
  }
  SUBCASE("bad step") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(1, 1), b = a;
    CHECK_THROWS_AS(discretize_zoh(a, b, 0.0), Error);
  }
}

TEST_CASE("simulate") {
  const auto model = chain_model(3, 0.05);
  const auto dss = discretize_zoh(model);

  SUBCASE("no excitation gives a zero panel") {
    const auto panel = simulate(dss, NoiseSpec::white(3, 0.0), {1000, 1, 10}, model.labels());
    CHECK(panel.samples.isZero(0.0));
    CHECK(panel.burn_in_discarded == 10);
  }
  SUBCASE("determinism and relabeling") {
    const auto a = simulate(dss, model.noise, {5000, 9, 100}, model.labels());
    const auto b = simulate(dss, model.noise, {5000, 9, 100}, model.labels());
    CHECK(a.samples == b.samples);
    const auto c = simulate(dss, model.noise, {5000, 9, 100}, {"x", "y", "z"});
    CHECK(c.samples == a.samples);
    const auto d = simulate(dss, model.noise, {5000, 10, 100}, model.labels());
    CHECK_FALSE(d.samples == a.samples);
  }
  SUBCASE("stream and panel agree") {
    const auto panel = simulate(dss, model.noise, {300, 4, 7}, model.labels());
    std::vector<double> streamed;
    simulate_stream(dss, model.noise, {300, 4, 7},
                    [&](std::span<const double> y) { streamed.insert(streamed.end(), y.begin(), y.end()); });
    REQUIRE(streamed.size() == 900);
    for (Eigen::Index k = 0; k < 300; ++k)
      for (Eigen::Index i = 0; i < 3; ++i) CHECK(streamed[static_cast<std::size_t>(k * 3 + i)] == panel.samples(i, k));
  }
  SUBCASE("unstable systems are refused") {
    auto bad = dss;
    bad.a *= 2.0;
    CHECK_THROWS_AS(simulate(bad, model.noise, {100, 0, 0}, model.labels()), Error);
    try {
      simulate(bad, model.noise, {100, 0, 0}, model.labels());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnstableSystem);
    }
  }
  SUBCASE("sample variance matches the stationary covariance") {
    const auto panel = simulate(dss, model.noise, {1'000'000, 11, 20'000}, model.labels());
    const Eigen::MatrixXd q = dss.b * dss.b.transpose();
    const Eigen::MatrixXd p = oracle::stationary_covariance(dss.a, q);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const auto row = panel.samples.row(i).array();
      const double mean = row.mean();
      const double var = (row - mean).square().mean();
      CHECK(std::abs(var / p(i, i) - 1.0) < 0.05);
    }
  }
}

TEST_CASE("analytic_psd") {
  SUBCASE("white passthrough") {
    DiscreteStateSpace d{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2),
                         Eigen::MatrixXd::Identity(2, 2), 1.0};
    NoiseSpec noise{{2.0, 0.5}, {0.0, 0.0}};
    const auto grid = fft_grid(64);
    const auto f = analytic_psd(d, noise, grid, {"a", "b"});
    for (const auto& m : f.matrices) {
      CHECK(std::abs(m(0, 0) - 4.0) < 1e-12);
      CHECK(std::abs(m(1, 1) - 0.25) < 1e-12);
      CHECK(std::abs(m(0, 1)) < 1e-12);
    }
  }
  SUBCASE("scalar AR(1) closed form") {
    const double a = 0.7;
    DiscreteStateSpace d{Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Identity(1, 1),
                         Eigen::MatrixXd::Identity(1, 1), 1.0};
    const auto grid = fft_grid(128);
    const auto f = analytic_psd(d, NoiseSpec::white(1, 1.3), grid, {"x"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(f.matrices[k](0, 0).real() ==
            doctest::Approx(oracle::ar1_spectrum(a, 1.3, grid[k])).epsilon(1e-12));
    }
  }
  SUBCASE("coloured input equals a white input through an AR(1) prefilter") {
    // Passthrough of AR(1) noise has the AR(1) spectrum.
    DiscreteStateSpace d{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1),
                         Eigen::MatrixXd::Identity(1, 1), 1.0};
    const auto grid = fft_grid(64);
    const auto f = analytic_psd(d, NoiseSpec{{0.8}, {-0.4}}, grid, {"x"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(f.matrices[k](0, 0).real() ==
            doctest::Approx(oracle::ar1_spectrum(-0.4, 0.8, grid[k])).epsilon(1e-12));
    }
  }
  SUBCASE("Hermitian positive semidefinite on a grid model") {
    const auto model = chain_model(5, 0.01);
    const auto f = analytic_psd(discretize_zoh(model), model.noise, fft_grid(256), model.labels());
    for (const auto& m : f.matrices) {
      CHECK((m - m.adjoint()).norm() == 0.0);
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m).eigenvalues();
      CHECK(ev.minCoeff() >= -1e-10 * std::max(1.0, ev.maxCoeff()));
    }
  }
}

TEST_CASE("panel validation") {
  TimeSeriesPanel p{{"a"}, RowMajorMatrix::Zero(1, 1), 1.0, 0};
  CHECK_THROWS_AS(p.validate(), Error);
  p.samples = RowMajorMatrix::Zero(1, 4);
  p.samples(0, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(p.validate(), Error);
}
