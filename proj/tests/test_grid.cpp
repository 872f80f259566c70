#include "doctest.h"
#include "oracles.hpp"

#include "tweezer/error.hpp"
#include "tweezer/grid.hpp"

#include <cmath>
#include <numbers>

using namespace tweezer;

namespace {

struct Moments {
  double mean;
  double sigma;
  double norm;
};

Moments moments(const Eigen::VectorXd& axis, const Eigen::VectorXcd& amp, double step) {
  const Eigen::VectorXd rho = amp.cwiseAbs2() * step;
  const double norm = rho.sum();
  const double mean = rho.dot(axis) / norm;
  const double var = rho.dot((axis.array() - mean).square().matrix()) / norm;
  return {mean, std::sqrt(var), norm};
}

}  // namespace

TEST_CASE("grid spacing and momentum axis") {
  auto g = make_grid(-5.0, 5.0, 5000);
  CHECK(g->dx() == doctest::Approx(0.002).epsilon(1e-12));
  auto unit = make_grid(0.0, 1.0, 100);
  CHECK(unit->dx() == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 101), ConfigError);
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 100), ConfigError);

  const auto& k = unit->wavenumbers();
  const double dk = 2.0 * std::numbers::pi / unit->extent();
  CHECK(unit->dk() == doctest::Approx(dk));
  CHECK(k[0] == 0.0);
  CHECK(k[1] == doctest::Approx(dk));
  CHECK(k[49] == doctest::Approx(49 * dk));
  CHECK(k[50] == doctest::Approx(-50 * dk));
  CHECK(k[99] == doctest::Approx(-dk));
  CHECK(unit->nearest_index(0.504) == 50);
  CHECK(unit->nearest_index(-3.0) == 0);
}

TEST_CASE("momentum transform of a constant is a single k = 0 component") {
  auto g = make_grid(0.0, 1.0, 64);
  WaveFunction psi(g, Eigen::VectorXcd::Ones(64));
  auto phi = to_momentum(psi);
  // dx / sqrt(2 pi) * n
  CHECK(std::abs(phi[0]) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
  for (int j = 1; j < 64; ++j) CHECK(std::abs(phi[j]) < 1e-12);
}

TEST_CASE("plane wave on the grid maps to a single momentum bin") {
  auto g = make_grid(-1.0, 1.0, 128);
  const double k0 = 7 * g->dk();
  Eigen::VectorXcd amp(128);
  for (int j = 0; j < 128; ++j) amp[j] = std::polar(1.0, k0 * g->position(j));
  auto phi = to_momentum(WaveFunction(g, amp));
  for (int j = 0; j < 128; ++j) {
    if (j == 7)
      CHECK(std::abs(phi[j]) == doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
    else
      CHECK(std::abs(phi[j]) < 1e-10);
  }
}

TEST_CASE("Gaussian of width sigma maps to a Gaussian of width 1/(2 sigma)") {
  auto g = make_grid(-4.0, 6.0, 2048);
  for (double sigma : {0.05, 0.1, 0.3}) {
    for (double k0 : {0.0, 25.0}) {
      WaveFunction psi(g, oracle::gaussian(*g, 1.0, sigma, k0));
      auto x = moments(g->positions(), psi.amplitudes(), g->dx());
      CHECK(x.mean == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(x.sigma == doctest::Approx(sigma).epsilon(1e-8));
      auto phi = to_momentum(psi);
      auto k = moments(g->wavenumbers(), phi, g->dk());
      CHECK(k.norm == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(k.mean == doctest::Approx(k0).epsilon(1e-8).scale(1.0));
      CHECK(k.sigma == doctest::Approx(1.0 / (2.0 * sigma)).epsilon(1e-8));
      // Continuous transform of the Gaussian, evaluated pointwise.
      const double s = 1.0 / (2.0 * sigma);
      const int j = 3;
      const double kj = g->wavenumbers()[j] - k0;
      const double expected = std::pow(2.0 * std::numbers::pi * s * s, -0.25) * std::exp(-kj * kj / (4.0 * s * s));
      CHECK(std::abs(phi[j]) == doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("momentum round trip and Parseval") {
  auto g = make_grid(-2.0, 2.0, 256);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  Eigen::VectorXcd amp(256);
  for (auto& a : amp) a = cplx(n01(rng), n01(rng));
  WaveFunction psi(g, amp);
  psi.normalize();
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-14));
  auto phi = to_momentum(psi);
  CHECK(momentum_norm(*g, phi) == doctest::Approx(1.0).epsilon(1e-12));
  auto back = from_momentum(g, phi);
  CHECK((back.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inner product symmetry and grid checks") {
  auto g = make_grid(-2.0, 2.0, 128);
  WaveFunction a(g, oracle::gaussian(*g, 0.0, 0.2, 3.0));
  WaveFunction b(g, oracle::gaussian(*g, 0.3, 0.25, -1.0));
  CHECK(std::abs(inner_product(a, a) - 1.0) < 1e-12);
  const cplx ab = inner_product(a, b);
  const cplx ba = inner_product(b, a);
  CHECK(std::abs(ab - std::conj(ba)) < 1e-14);
  auto other = make_grid(-2.0, 2.0, 130);
  WaveFunction c(other, oracle::gaussian(*other, 0.0, 0.2));
  CHECK_THROWS_AS((void)inner_product(a, c), DimensionError);
}
