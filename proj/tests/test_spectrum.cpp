#include "doctest.h"
#include "oracles.hpp"

#include "tweezer/error.hpp"
#include "tweezer/spectrum.hpp"
#include "tweezer/trap.hpp"

#include <cmath>

using namespace tweezer;

namespace {

// k_B * 1 mK / hbar in rad/us and the harmonic frequency sqrt(4 |U0| hbar / (m w0^2))
// for Sr-88, U0 = -1 mK, w0 = 0.5 um, both evaluated with 30-digit arithmetic.
constexpr double kMillikelvin = 130.920339207206;
constexpr double kHarmonicOmega = 1.23005690925258;

}  // namespace

TEST_CASE("Gaussian trap potential") {
  auto g = make_grid(-2.0, 2.0, 400);
  TrapParams trap;
  auto v = potential_at(trap, *g);
  const int c = g->nearest_index(0.0);
  CHECK(v[c] == doctest::Approx(-kMillikelvin).epsilon(1e-9));
  const double x = 0.5 / std::sqrt(2.0);
  auto shifted = potential_at(trap, *g, g->position(c) - x);
  CHECK(shifted[c] == doctest::Approx(-kMillikelvin / std::exp(1.0)).epsilon(1e-9));
  CHECK(std::abs(v[0]) < 1e-10);
  CHECK(harmonic_frequency(trap) == doctest::Approx(kHarmonicOmega).epsilon(1e-9));
}

TEST_CASE("recapture window of the trap profile") {
  // sqrt(2) erfinv(0.3) w0 / 2, the 65th percentile of a normal distribution with sd w0 / 2.
  CHECK(profile_quantile_halfwidth(0.5, 0.30) == doctest::Approx(0.0963301166018919).epsilon(1e-10));
  CHECK(profile_quantile_halfwidth(1.0, 0.30) == doctest::Approx(2 * 0.0963301166018919).epsilon(1e-10));
  CHECK_THROWS_AS(profile_quantile_halfwidth(0.5, 1.5), ConfigError);
}

TEST_CASE("spectrum matches a finite-difference diagonalization") {
  auto g = make_grid(-2.0, 2.0, 2000);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 4);
  REQUIRE(spec.energies.size() == 4);
  CHECK_FALSE(spec.truncated);
  const UnitSystem units;
  auto fd = oracle::finite_difference_levels(units.kinetic_prefactor(), -kMillikelvin, 0.5, -1.5, 1.5, 1501, 4);
  for (int i = 0; i < 4; ++i) CHECK(spec.energies[i] == doctest::Approx(fd[i]).epsilon(1e-7));

  const double gap = spec.energies[1] - spec.energies[0];
  CHECK(gap == doctest::Approx(kHarmonicOmega).epsilon(0.10));
  CHECK(4.0 * 3.141592653589793 / gap == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("eigenstates are orthonormal with alternating parity") {
  auto g = make_grid(-2.0, 2.0, 1000);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(spec.states[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < i; ++j) CHECK(std::abs(inner_product(spec.states[i], spec.states[j])) < 1e-8);
    // Grid symmetric about 0 up to the first point: compare psi(x) with psi(-x).
    const auto& a = spec.states[i].amplitudes();
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    double mismatch = 0.0;
    for (int j = 1; j < 1000; ++j) mismatch = std::max(mismatch, std::abs(a[j] - sign * a[1000 - j]));
    CHECK(mismatch < 1e-8);
  }
  // Residual of the eigen equation on the full grid.
  for (int i = 0; i < 5; ++i) {
    auto h = apply_hamiltonian(trap, spec.states[i]);
    CHECK((h - spec.energies[i] * spec.states[i].amplitudes()).norm() * std::sqrt(g->dx()) < 1e-6);
  }
}

TEST_CASE("thermal weights") {
  auto g = make_grid(-2.0, 2.0, 1000);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 4);
  auto ens = thermal_ensemble(spec, 1.0, 4);
  const double kt = kMillikelvin * 1e-3;
  const double gap = spec.energies[1] - spec.energies[0];
  CHECK(ens.weights[1] / ens.weights[0] == doctest::Approx(std::exp(-gap / kt)).epsilon(1e-10));
  // Harmonic-oscillator estimate exp(-omega / k_B T) = 8.31e-5.
  CHECK(ens.weights[1] / ens.weights[0] == doctest::Approx(8.31e-5).epsilon(0.1));
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    sum += ens.weights[i];
    if (i > 0) CHECK(ens.weights[i] <= ens.weights[i - 1]);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));

  auto cold = thermal_ensemble(spec, 1e-3, 4);
  CHECK(cold.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  auto pure = thermal_ensemble(spec, 30.0, 1);
  REQUIRE(pure.cutoff() == 1);
  CHECK(pure.weights[0] == 1.0);
  CHECK_THROWS_AS(thermal_ensemble(spec, 1.0, 5), ConfigError);
}

TEST_CASE("cutoff fidelity") {
  std::vector<double> p{0.7, 0.2, 0.1};
  CHECK(cutoff_fidelity(p, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cutoff_fidelity({1.0}, {0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-15));

  auto g = make_grid(-2.0, 2.0, 1000);
  auto spec = solve_spectrum(TrapParams{}, g, 16);
  auto reference = boltzmann_weights(spec.energies, 10.0, 16);
  double previous = 1.0;
  for (int n : {2, 4, 8}) {
    const double infidelity = 1.0 - cutoff_fidelity(boltzmann_weights(spec.energies, 10.0, n), reference);
    CHECK(infidelity < previous);
    previous = infidelity;
  }
}

TEST_CASE("shifted ensembles") {
  auto g = make_grid(-2.0, 5.0, 1400);
  auto spec = solve_spectrum(TrapParams{}, g, 3);
  auto ens = thermal_ensemble(spec, 10.0, 3);
  auto same = shifted_ensemble(ens, 0.0);
  for (int i = 0; i < 3; ++i)
    CHECK((same.states[i].amplitudes() - ens.states[i].amplitudes()).cwiseAbs().maxCoeff() < 1e-12);

  auto mean_x = [&](const WaveFunction& psi) {
    return (psi.amplitudes().cwiseAbs2().array() * g->positions().array()).sum() * g->dx();
  };
  auto moved = shifted_ensemble(ens, 3.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(mean_x(moved.states[i]) - mean_x(ens.states[i]) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(moved.weights[i] == ens.weights[i]);
  }
  auto twice = shifted_state(shifted_state(ens.states[1], 0.75), 0.75);
  auto once = shifted_state(ens.states[1], 1.5);
  CHECK((twice.amplitudes() - once.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(shifted_ensemble(ens, 4.95), ConfigError);
}
