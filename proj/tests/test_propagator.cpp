#include "doctest.h"
#include "oracles.hpp"

#include "tweezer/noise.hpp"
#include "tweezer/propagator.hpp"
#include "tweezer/spectrum.hpp"

#include <cmath>

using namespace tweezer;

TEST_CASE("trap ground state is stationary over 50 us") {
  auto g = make_grid(-2.0, 2.0, 2000);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 1);
  // The Strang step's own eigenvectors differ from the exact ones by O(dt^2), so the
  // overlap loss scales as dt^4: about 1.8e-6 at dt = 0.1 and 1.1e-7 at dt = 0.05.
  auto coarse = evolve(spec.states[0], EvolutionPlan::static_trap(trap, 0.1, 50.0));
  auto plan = EvolutionPlan::static_trap(trap, 0.05, 50.0);
  CHECK(plan.n_steps == 1000);
  auto out = evolve(spec.states[0], plan);
  const double loss_coarse = 1.0 - std::norm(inner_product(spec.states[0], coarse.state));
  const double loss = 1.0 - std::norm(inner_product(spec.states[0], out.state));
  CHECK(loss < 1e-6);
  CHECK(loss_coarse / loss == doctest::Approx(16.0).epsilon(0.1));
  // Accumulated phase is the eigenvalue up to the O(dt^2) energy shift.
  const cplx overlap = inner_product(spec.states[0], out.state);
  const double phase = std::remainder(std::arg(overlap) + spec.energies[0] * 50.0, 2.0 * 3.141592653589793);
  CHECK(std::abs(phase) < 1e-2);
}

TEST_CASE("free packet spreads as sigma^2(0) + (hbar t / (2 m sigma(0)))^2") {
  auto g = make_grid(-4.0, 4.0, 2048);
  const double sigma0 = 0.05;
  WaveFunction psi(g, oracle::gaussian(*g, 0.0, sigma0, 40.0));
  const UnitSystem units;
  TrapParams trap;
  auto plan = EvolutionPlan::static_trap(trap, 0.1, 20.0);
  std::fill(plan.depth_factor.begin(), plan.depth_factor.end(), 0.0);
  plan.record_observables = true;
  auto out = evolve(psi, plan);
  for (int node : {50, 100, 200}) {
    const double t = node * 0.1;
    const double spread = units.kinetic_prefactor() * t / sigma0;
    const double expected = std::sqrt(sigma0 * sigma0 + spread * spread);
    CHECK(out.trajectory.nodes[node].sigma_x == doctest::Approx(expected).epsilon(1e-3));
    CHECK(out.trajectory.nodes[node].mean_x == doctest::Approx(2.0 * units.kinetic_prefactor() * 40.0 * t).epsilon(1e-6));
  }
  auto exact = free_evolve(psi, 20.0);
  CHECK((exact.amplitudes() - out.state.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("norm is conserved under a noisy transport") {
  auto g = make_grid(-1.5, 4.5, 2048);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 2);
  auto pulse = Pulse::piecewise_quadratic(0.0, 3.0, 90.0);
  NoiseSpec noise;
  noise.seed = 5;
  auto realization = sample_realization(noise, 0.1, 1000);
  auto plan = EvolutionPlan::from_pulse(trap, pulse, 0.1, 100.0, &realization);
  REQUIRE(plan.n_steps == 1000);
  auto out = evolve(spec.states[1], plan);
  CHECK(std::abs(out.state.norm() - 1.0) < 1e-8);
}

TEST_CASE("time reversal recovers the initial state") {
  auto g = make_grid(-1.5, 4.5, 1024);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 2);
  auto plan = EvolutionPlan::from_pulse(trap, Pulse::piecewise_quadratic(0.0, 3.0, 13.0), 0.1, 18.0);
  auto forward = evolve(spec.states[1], plan);
  WaveFunction turned(g, forward.state.amplitudes().conjugate());
  auto backward = evolve(turned, plan.time_reversed());
  Eigen::VectorXcd recovered = backward.state.amplitudes().conjugate();
  CHECK((recovered - spec.states[1].amplitudes()).cwiseAbs().maxCoeff() * std::sqrt(g->dx()) < 1e-6);
}

TEST_CASE("ensemble evolution") {
  auto g = make_grid(-1.5, 4.5, 1024);
  TrapParams trap;
  auto spec = solve_spectrum(trap, g, 4);
  auto plan = EvolutionPlan::from_pulse(trap, Pulse::piecewise_quadratic(0.0, 3.0, 12.0), 0.1, 15.0);

  auto single = evolve(spec.states[0], plan);
  auto one = evolve_ensemble(std::span(spec.states).first(1), plan);
  CHECK(one.states[0].amplitudes() == single.state.amplitudes());

  auto serial = evolve_ensemble(spec.states, plan, 1);
  auto threaded = evolve_ensemble(spec.states, plan, 3);
  for (int i = 0; i < 4; ++i) {
    CHECK(serial.states[i].amplitudes() == threaded.states[i].amplitudes());
    for (int j = 0; j < i; ++j) CHECK(std::abs(inner_product(serial.states[i], serial.states[j])) < 1e-6);
  }
}

TEST_CASE("plan validation") {
  TrapParams trap;
  auto plan = EvolutionPlan::static_trap(trap, 0.1, 1.0);
  plan.center_um.pop_back();
  CHECK_THROWS(plan.validate());
  auto bad = EvolutionPlan::static_trap(trap, 0.1, 1.0);
  bad.depth_factor[3] = std::nan("");
  CHECK_THROWS(bad.validate());
}
