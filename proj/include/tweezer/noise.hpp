#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace tweezer {

/// Trap noise model. Frequencies in MHz, times in us.
///
/// Depth:    U0 (1 + dS(t) + dU0(t)), dS is relative intensity noise with one-sided
///           spectrum A_L / sqrt(f) (f in Hz), dU0 two random-frequency sinusoids.
/// Waist:    w0 (1 + dw0(t)), a sinusoid with fixed period.
/// Position: r(t) + dr(t), a random-frequency sinusoid.
/// Every sinusoid gets a uniform random phase; frequencies are redrawn per realization.
struct NoiseSpec {
  double rin_amplitude = 1e-11;

  double depth_low_amplitude = 0.01;
  double depth_low_max_mhz = 0.1;      // frequency drawn in (0, max]
  double depth_high_amplitude = 0.05;
  double depth_high_min_mhz = 0.1;     // frequency drawn in (min, max]
  double depth_high_max_mhz = 1.0;

  double waist_amplitude = 0.01;
  double waist_period_us = 6.0;

  double position_amplitude_um = 0.01;
  double position_min_mhz = 50.0;
  double position_max_mhz = 150.0;

  /// Lower clamp on the depth factor so the trap never changes sign.
  double depth_factor_floor = 0.01;

  std::uint64_t seed = 1;

  /// All amplitudes zero: realizations are identically (1, 1, 0).
  static NoiseSpec none();
  [[nodiscard]] bool is_silent() const;
  /// Throws ConfigError on negative amplitudes or empty frequency ranges.
  void validate() const;
};

/// Per-node factors at t_k = k dt, k = 0..n_steps.
struct NoiseRealization {
  double dt = 0.0;
  std::vector<double> depth_factor;
  std::vector<double> waist_factor;
  std::vector<double> position_offset;  // um

  static NoiseRealization identity(double dt, int n_steps);
  [[nodiscard]] std::size_t size() const { return depth_factor.size(); }
};

/// Colored RIN series of n_samples values with spacing dt (us), synthesized by
/// shaping complex white Gaussian noise with sqrt(S(f)) and zeroing the DC bin.
/// Deterministic in (spec.seed, stream).
std::vector<double> sample_rin(const NoiseSpec& spec, double dt, int n_samples,
                               std::uint64_t stream = 0);

/// One realization of all noise channels on n_steps + 1 nodes. The stream index lets
/// ensemble members draw independent realizations from one spec seed.
NoiseRealization sample_realization(const NoiseSpec& spec, double dt, int n_steps,
                                    std::uint64_t stream = 0);

/// One-sided periodogram 2 dt / N |DFT(x)_j|^2 at f_j = j / (N dt) for j = 1..N/2,
/// frequencies in Hz with dt given in us.
struct Periodogram {
  std::vector<double> frequency_hz;
  std::vector<double> power;
};
Periodogram periodogram(const std::vector<double>& series, double dt);

/// CSV with header t_us,depth_factor,waist_factor,position_offset_um.
void write_noise_csv(std::ostream& out, const NoiseRealization& noise);

}  // namespace tweezer
