#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace tweezer {

/// One randomized correction element of a dressed pulse, multiplied by the
/// boundary envelope sin^2(pi t / t_p) so that it vanishes at both ends.
struct BasisElement {
  enum class Kind { Sinc, Fourier };
  Kind kind = Kind::Sinc;
  double frequency_mhz = 0.0;
  /// Sinc: center time in us. Fourier: phase in rad.
  double offset = 0.0;

  [[nodiscard]] double operator()(double t, double t_p) const;
};

namespace detail {
struct PulseShape;
}

/// Trap-center trajectory r(t) on [0, t_p] with r(0) = r_0 and r(t_p) = r_f held
/// exactly. Outside the transport window the trap sits still: r = r_0 before
/// and r = r_f after. Immutable and cheap to copy.
class Pulse {
 public:
  enum class Kind { PiecewiseQuadratic, Sampled, Dressed, Reversed };

  /// Two-segment constant-acceleration ramp: r_0 + 2 (r_f - r_0) t^2 / t_p^2 up to
  /// t_p / 2, mirrored afterwards.
  static Pulse piecewise_quadratic(double r_0, double r_f, double t_p);
  /// Linear interpolation through (t, r) samples; t must start at 0 and increase.
  /// The endpoint samples define r_0, r_f and t_p.
  static Pulse sampled(std::vector<double> times, std::vector<double> values);
  /// c0-scaled previous pulse plus randomized corrections:
  ///   r(t) = b(t) + c0 (prev(t) - b(t)) + sum_i c_i e_i(t)
  /// where b is the straight line between the endpoints, so the endpoints are kept for any c.
  static Pulse dressed(const Pulse& previous, double c0, std::vector<double> coefficients,
                       std::vector<BasisElement> basis);

  [[nodiscard]] double operator()(double t) const;
  [[nodiscard]] double duration() const;
  [[nodiscard]] double start() const;
  [[nodiscard]] double end() const;
  [[nodiscard]] Kind kind() const;

  /// r_rev(t) = r(t_p - t): the same path travelled backwards.
  [[nodiscard]] Pulse reversed() const;
  /// Pulse values at t_k = k dt for k = 0..round(t_total / dt); r = r_f for t > t_p.
  [[nodiscard]] std::vector<double> sample(double dt, double t_total) const;

 private:
  explicit Pulse(std::shared_ptr<const detail::PulseShape> shape) : shape_(std::move(shape)) {}
  std::shared_ptr<const detail::PulseShape> shape_;
};

/// AOD drive conversion, 3 um per MHz.
inline constexpr double kMicronsPerMegahertz = 3.0;
[[nodiscard]] constexpr double aod_frequency_of(double position_um) {
  return position_um / kMicronsPerMegahertz;
}
[[nodiscard]] constexpr double position_of_aod_frequency(double frequency_mhz) {
  return frequency_mhz * kMicronsPerMegahertz;
}

/// Least-squares fit by continuous piecewise quadratics with knots every
/// segment_length us from t = 0, endpoints pinned to r_0 and r_f. The pulse is
/// sampled every sample_dt for the fit and the result is returned on that grid.
Pulse fit_piecewise_quadratic(const Pulse& pulse, double segment_length, double sample_dt);

/// Convenience wrapper around Pulse::sample.
std::vector<double> sample_pulse(const Pulse& pulse, double dt, double t_total);

/// Two-column text export: "t_us,r_um" or "t_us,f_mhz" header then rows.
void write_pulse_csv(std::ostream& out, const Pulse& pulse, double dt, bool as_frequency = false);
/// Reads the same two-column format (either unit; frequency columns are converted).
Pulse read_pulse_csv(std::istream& in);

}  // namespace tweezer
