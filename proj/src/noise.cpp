#include "tweezer/noise.hpp"

#include "tweezer/error.hpp"
#include "tweezer/units.hpp"
#include "fftw_util.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <random>

namespace tweezer {

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

// Independent engines per (seed, stream, channel).
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint32_t channel) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    channel};
  return std::mt19937_64(seq);
}

// Uniform on (lo, hi]: the lower edge is excluded so a zero frequency never occurs.
double uniform_open_closed(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return hi - (hi - lo) * u(rng);
}

std::vector<std::complex<double>> real_dft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  std::vector<double> in(x);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(detail::fftw_planner_mutex());
  fftw_destroy_plan(plan);
  return out;
}

std::vector<double> inverse_real_dft(std::vector<std::complex<double>> half, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(half.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (double& v : out) v /= n;
  return out;
}

}  // namespace

NoiseSpec NoiseSpec::none() {
  NoiseSpec s;
  s.rin_amplitude = 0.0;
  s.depth_low_amplitude = 0.0;
  s.depth_high_amplitude = 0.0;
  s.waist_amplitude = 0.0;
  s.position_amplitude_um = 0.0;
  return s;
}

bool NoiseSpec::is_silent() const {
  return rin_amplitude == 0.0 && depth_low_amplitude == 0.0 && depth_high_amplitude == 0.0 &&
         waist_amplitude == 0.0 && position_amplitude_um == 0.0;
}

void NoiseSpec::validate() const {
  for (double a : {rin_amplitude, depth_low_amplitude, depth_high_amplitude, waist_amplitude,
                   position_amplitude_um})
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("noise amplitudes must be finite and >= 0");
  if (!(depth_low_max_mhz > 0.0)) throw ConfigError("noise.depth_low_max_mhz must be positive");
  if (!(depth_high_max_mhz > depth_high_min_mhz) || depth_high_min_mhz < 0.0)
    throw ConfigError("noise high-frequency depth band is empty");
  if (!(waist_period_us > 0.0)) throw ConfigError("noise.waist_period_us must be positive");
  if (!(position_max_mhz >= position_min_mhz) || position_min_mhz < 0.0)
    throw ConfigError("noise position band is empty");
  if (!(depth_factor_floor > 0.0)) throw ConfigError("noise.depth_factor_floor must be positive");
}

NoiseRealization NoiseRealization::identity(double dt, int n_steps) {
  const auto n = static_cast<std::size_t>(n_steps) + 1;
  return {dt, std::vector<double>(n, 1.0), std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
}

std::vector<double> sample_rin(const NoiseSpec& spec, double dt, int n_samples, std::uint64_t stream) {
  if (n_samples < 2) throw ConfigError("RIN synthesis needs at least two samples");
  if (!(dt > 0.0)) throw ConfigError("RIN synthesis needs dt > 0");
  const auto n = static_cast<std::size_t>(n_samples);
  if (spec.rin_amplitude == 0.0) return std::vector<double>(n, 0.0);

  auto rng = make_engine(spec.seed, stream, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt_s = dt * 1e-6;
  const double df = 1.0 / (static_cast<double>(n) * dt_s);
  std::vector<std::complex<double>> half(n / 2 + 1, {0.0, 0.0});
  for (std::size_t j = 1; j < half.size(); ++j) {
    const double f = static_cast<double>(j) * df;
    const double psd = spec.rin_amplitude / std::sqrt(f);
    const double scale = std::sqrt(psd * static_cast<double>(n) / (2.0 * dt_s));
    const double re = gauss(rng);
    const double im = gauss(rng);
    const bool nyquist = (n % 2 == 0) && j == n / 2;
    half[j] = nyquist ? std::complex<double>(scale * re, 0.0)
                      : std::complex<double>(scale * re / std::sqrt(2.0), scale * im / std::sqrt(2.0));
  }
  // c2r supplies the Hermitian partners of bins 1..n/2-1 implicitly
  return inverse_real_dft(std::move(half), n_samples);
}

NoiseRealization sample_realization(const NoiseSpec& spec, double dt, int n_steps, std::uint64_t stream) {
  spec.validate();
  auto out = NoiseRealization::identity(dt, n_steps);
  if (spec.is_silent()) return out;

  auto rng = make_engine(spec.seed, stream, 0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double f_low = uniform_open_closed(rng, 0.0, spec.depth_low_max_mhz);
  const double phi_low = phase(rng);
  const double f_high = uniform_open_closed(rng, spec.depth_high_min_mhz, spec.depth_high_max_mhz);
  const double phi_high = phase(rng);
  const double phi_waist = phase(rng);
  const double f_pos = spec.position_min_mhz +
                       (spec.position_max_mhz - spec.position_min_mhz) *
                           std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double phi_pos = phase(rng);

  const auto rin = sample_rin(spec, dt, n_steps + 1, stream);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const double depth = 1.0 + rin[k] +
                         spec.depth_low_amplitude * std::sin(kTwoPi * f_low * t + phi_low) +
                         spec.depth_high_amplitude * std::sin(kTwoPi * f_high * t + phi_high);
    out.depth_factor[k] = std::max(depth, spec.depth_factor_floor);
    out.waist_factor[k] = 1.0 + spec.waist_amplitude * std::sin(kTwoPi * t / spec.waist_period_us + phi_waist);
    // evaluated at the sample instants, far above the Nyquist rate of typical dt
    out.position_offset[k] = spec.position_amplitude_um * std::sin(kTwoPi * f_pos * t + phi_pos);
  }
  return out;
}

Periodogram periodogram(const std::vector<double>& series, double dt) {
  const auto n = series.size();
  if (n < 2) throw ConfigError("periodogram needs at least two samples");
  const auto spectrum = real_dft(series);
  const double dt_s = dt * 1e-6;
  Periodogram p;
  for (std::size_t j = 1; j <= n / 2; ++j) {
    p.frequency_hz.push_back(static_cast<double>(j) / (static_cast<double>(n) * dt_s));
    p.power.push_back(2.0 * dt_s / static_cast<double>(n) * std::norm(spectrum[j]));
  }
  return p;
}

void write_noise_csv(std::ostream& out, const NoiseRealization& noise) {
  out << "t_us,depth_factor,waist_factor,position_offset_um\n" << std::setprecision(17);
  for (std::size_t k = 0; k < noise.size(); ++k)
    out << static_cast<double>(k) * noise.dt << ',' << noise.depth_factor[k] << ','
        << noise.waist_factor[k] << ',' << noise.position_offset[k] << '\n';
}

}  // namespace tweezer
