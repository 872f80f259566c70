#include "doctest.h"

#include "tweezer/dcrab.hpp"
#include "tweezer/error.hpp"
#include "tweezer/pulse.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace tweezer;

TEST_CASE("piecewise quadratic ramp") {
  auto p = Pulse::piecewise_quadratic(0.0, 3.0, 20.0);
  CHECK(p(0.0) == 0.0);
  CHECK(p(20.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(p(10.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(p(5.0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(p(15.0) == doctest::Approx(2.625).epsilon(1e-15));
  CHECK(p(-1.0) == 0.0);
  CHECK(p(25.0) == 3.0);
  CHECK(p.duration() == 20.0);
  CHECK_THROWS_AS(Pulse::piecewise_quadratic(0.0, 3.0, 0.0), ConfigError);
}

TEST_CASE("AOD frequency conversion") {
  CHECK(aod_frequency_of(3.0) == doctest::Approx(1.0));
  CHECK(aod_frequency_of(0.0) == 0.0);
  CHECK(aod_frequency_of(1.5) == doctest::Approx(0.5));
  CHECK(position_of_aod_frequency(aod_frequency_of(2.2)) == doctest::Approx(2.2));
}

TEST_CASE("sampling holds r_f after the pulse") {
  auto p = Pulse::piecewise_quadratic(0.0, 3.0, 20.0);
  auto s = p.sample(0.1, 30.0);
  REQUIRE(s.size() == 301);
  for (std::size_t k = 200; k < s.size(); ++k) CHECK(s[k] == 3.0);
  auto three = p.sample(10.0, 20.0);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == 0.0);
  CHECK(three[1] == doctest::Approx(1.5));
  CHECK(three[2] == doctest::Approx(3.0));

  auto dressed = Pulse::dressed(p, 0.9, {0.05, -0.02},
                                {{BasisElement::Kind::Sinc, 0.3, 7.0}, {BasisElement::Kind::Fourier, 0.2, 1.0}});
  auto fwd = dressed.sample(0.1, 20.0);
  auto rev = dressed.reversed().sample(0.1, 20.0);
  REQUIRE(fwd.size() == rev.size());
  for (std::size_t k = 0; k < fwd.size(); ++k) CHECK(rev[k] == doctest::Approx(fwd[fwd.size() - 1 - k]).epsilon(1e-12));
  CHECK(dressed.reversed().start() == doctest::Approx(3.0));
  CHECK(dressed.reversed().end() == doctest::Approx(0.0));
}

TEST_CASE("dressed pulses keep their endpoints") {
  auto p = Pulse::piecewise_quadratic(0.0, 3.0, 11.0);
  DcrabConfig config;
  auto basis = make_basis(0, 4, 11.0, config);
  auto d = Pulse::dressed(p, 1.7, {0.3, -0.2, 0.1, 0.4}, basis);
  CHECK(d(0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(d(11.0) == doctest::Approx(3.0).epsilon(1e-14));
  auto identity = Pulse::dressed(p, 1.0, {0.0, 0.0, 0.0, 0.0}, basis);
  for (double t = 0.0; t <= 11.0; t += 0.37) CHECK(identity(t) == doctest::Approx(p(t)).epsilon(1e-14));
}

TEST_CASE("piecewise quadratic fit") {
  auto pq = Pulse::piecewise_quadratic(0.0, 3.0, 20.0);
  auto fit = fit_piecewise_quadratic(pq, 10.0, 0.1);
  for (double t = 0.0; t <= 20.0; t += 0.1) CHECK(std::abs(fit(t) - pq(t)) < 1e-9);

  auto line = Pulse::sampled({0.0, 25.0}, {1.0, 4.0});
  auto fit_line = fit_piecewise_quadratic(line, 10.0, 0.1);
  for (double t = 0.0; t <= 25.0; t += 0.1) CHECK(std::abs(fit_line(t) - line(t)) < 1e-9);

  // Ramp plus a fast sinusoid that vanishes at both ends.
  const double amplitude = 0.05;
  std::vector<double> ts, rs;
  for (int k = 0; k <= 400; ++k) {
    const double t = 0.05 * k;
    ts.push_back(t);
    rs.push_back(pq(t) + amplitude * std::sin(2.0 * std::numbers::pi * t / 0.5));
  }
  auto wiggly = Pulse::sampled(ts, rs);
  auto smooth = fit_piecewise_quadratic(wiggly, 10.0, 0.05);
  double residual = 0.0;
  for (double t : ts) residual = std::max(residual, std::abs(smooth(t) - wiggly(t)));
  CHECK(residual <= amplitude * (1.0 + 1e-9));
  CHECK(residual > 0.5 * amplitude);
  CHECK(std::abs(smooth(10.0) - pq(10.0)) < 0.1 * amplitude);

  auto constrained = constrain_pulse(pq, PulseConstraint::PiecewiseQuadratic10us);
  for (double t = 0.0; t <= 20.0; t += 0.1) CHECK(std::abs(constrained(t) - pq(t)) < 1e-9);
  auto untouched = constrain_pulse(wiggly, PulseConstraint::None);
  for (double t : ts) CHECK(untouched(t) == wiggly(t));
}

TEST_CASE("pulse CSV round trip in position and frequency units") {
  auto pq = Pulse::piecewise_quadratic(0.0, 3.0, 12.0);
  for (bool as_frequency : {false, true}) {
    std::stringstream ss;
    write_pulse_csv(ss, pq, 0.1, as_frequency);
    const std::string header = ss.str().substr(0, ss.str().find('\n'));
    CHECK(header == (as_frequency ? "t_us,f_mhz" : "t_us,r_um"));
    auto back = read_pulse_csv(ss);
    CHECK(back.duration() == doctest::Approx(12.0));
    for (double t = 0.0; t <= 12.0; t += 0.1) CHECK(back(t) == doctest::Approx(pq(t)).epsilon(1e-10).scale(1.0));
  }
  std::stringstream bad("t_us,r_um\n0,0\nfoo,1\n");
  CHECK_THROWS(read_pulse_csv(bad));
}
