#include "tweezer/pulse.hpp"

#include "tweezer/error.hpp"
#include "tweezer/units.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace tweezer {

double BasisElement::operator()(double t, double t_p) const {
  const double s = std::sin(constants::pi * t / t_p);
  const double envelope = s * s;
  const double w = 2.0 * constants::pi * frequency_mhz;
  switch (kind) {
    case Kind::Sinc: {
      const double arg = w * (t - offset);
      const double sinc = std::abs(arg) < 1e-8 ? 1.0 - arg * arg / 6.0 : std::sin(arg) / arg;
      return sinc * envelope;
    }
    case Kind::Fourier:
      return std::sin(w * t + offset) * envelope;
  }
  return 0.0;
}

namespace detail {

struct PulseShape {
  double r_0;
  double r_f;
  double t_p;
  PulseShape(double r0, double rf, double tp) : r_0(r0), r_f(rf), t_p(tp) {}
  virtual ~PulseShape() = default;
  [[nodiscard]] virtual Pulse::Kind kind() const = 0;
  /// Only called for 0 < t < t_p.
  [[nodiscard]] virtual double interior(double t) const = 0;
};

namespace {

struct QuadraticShape final : PulseShape {
  using PulseShape::PulseShape;
  [[nodiscard]] Pulse::Kind kind() const override { return Pulse::Kind::PiecewiseQuadratic; }
  [[nodiscard]] double interior(double t) const override {
    const double a = 2.0 * (r_f - r_0) / (t_p * t_p);
    if (t <= 0.5 * t_p) return r_0 + a * t * t;
    const double s = t - t_p;
    return r_f - a * s * s;
  }
};

struct SampledShape final : PulseShape {
  std::vector<double> times;
  std::vector<double> values;
  SampledShape(std::vector<double> t, std::vector<double> r)
      : PulseShape(r.front(), r.back(), t.back()), times(std::move(t)), values(std::move(r)) {}
  [[nodiscard]] Pulse::Kind kind() const override { return Pulse::Kind::Sampled; }
  [[nodiscard]] double interior(double t) const override {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(std::distance(times.begin(), it));
    const std::size_t lo = hi - 1;
    const double u = (t - times[lo]) / (times[hi] - times[lo]);
    return values[lo] + u * (values[hi] - values[lo]);
  }
};

struct DressedShape final : PulseShape {
  Pulse previous;
  double c0;
  std::vector<double> coefficients;
  std::vector<BasisElement> basis;
  DressedShape(Pulse prev, double c, std::vector<double> coeffs, std::vector<BasisElement> b)
      : PulseShape(prev.start(), prev.end(), prev.duration()), previous(std::move(prev)), c0(c),
        coefficients(std::move(coeffs)), basis(std::move(b)) {}
  [[nodiscard]] Pulse::Kind kind() const override { return Pulse::Kind::Dressed; }
  [[nodiscard]] double interior(double t) const override {
    const double line = r_0 + (r_f - r_0) * t / t_p;
    double r = line + c0 * (previous(t) - line);
    for (std::size_t i = 0; i < basis.size(); ++i) r += coefficients[i] * basis[i](t, t_p);
    return r;
  }
};

struct ReversedShape final : PulseShape {
  Pulse forward;
  explicit ReversedShape(Pulse fwd)
      : PulseShape(fwd.end(), fwd.start(), fwd.duration()), forward(std::move(fwd)) {}
  [[nodiscard]] Pulse::Kind kind() const override { return Pulse::Kind::Reversed; }
  [[nodiscard]] double interior(double t) const override { return forward(t_p - t); }
};

}  // namespace
}  // namespace detail

Pulse Pulse::piecewise_quadratic(double r_0, double r_f, double t_p) {
  if (!(t_p > 0.0) || !std::isfinite(t_p)) throw ConfigError("pulse duration must be positive");
  if (!std::isfinite(r_0) || !std::isfinite(r_f)) throw ConfigError("pulse endpoints must be finite");
  return Pulse(std::make_shared<detail::QuadraticShape>(r_0, r_f, t_p));
}

Pulse Pulse::sampled(std::vector<double> times, std::vector<double> values) {
  if (times.size() != values.size() || times.size() < 2)
    throw ConfigError("sampled pulse needs at least two (t, r) pairs of equal length");
  if (times.front() != 0.0) throw ConfigError("sampled pulse must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("sampled pulse times must increase");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("sampled pulse values must be finite");
  return Pulse(std::make_shared<detail::SampledShape>(std::move(times), std::move(values)));
}

Pulse Pulse::dressed(const Pulse& previous, double c0, std::vector<double> coefficients,
                     std::vector<BasisElement> basis) {
  if (coefficients.size() != basis.size())
    throw DimensionError("one coefficient per basis element required");
  return Pulse(std::make_shared<detail::DressedShape>(previous, c0, std::move(coefficients),
                                                      std::move(basis)));
}

double Pulse::operator()(double t) const {
  if (t <= 0.0) return shape_->r_0;
  if (t >= shape_->t_p) return shape_->r_f;
  return shape_->interior(t);
}

double Pulse::duration() const { return shape_->t_p; }
double Pulse::start() const { return shape_->r_0; }
double Pulse::end() const { return shape_->r_f; }
Pulse::Kind Pulse::kind() const { return shape_->kind(); }

Pulse Pulse::reversed() const { return Pulse(std::make_shared<detail::ReversedShape>(*this)); }

std::vector<double> Pulse::sample(double dt, double t_total) const {
  if (!(dt > 0.0)) throw ConfigError("sampling step must be positive");
  const auto n = static_cast<std::size_t>(std::llround(t_total / dt));
  std::vector<double> r(n + 1);
  for (std::size_t k = 0; k <= n; ++k) r[k] = (*this)(static_cast<double>(k) * dt);
  return r;
}

std::vector<double> sample_pulse(const Pulse& pulse, double dt, double t_total) {
  return pulse.sample(dt, t_total);
}

Pulse fit_piecewise_quadratic(const Pulse& pulse, double segment_length, double sample_dt) {
  if (!(segment_length > 0.0)) throw ConfigError("segment length must be positive");
  if (!(sample_dt > 0.0)) throw ConfigError("sampling step must be positive");
  const double t_p = pulse.duration();

  std::vector<double> times;
  const auto n_samples = static_cast<long>(std::ceil(t_p / sample_dt - 1e-9));
  for (long k = 0; k < n_samples; ++k) times.push_back(static_cast<double>(k) * sample_dt);
  times.push_back(t_p);

  // Knots at multiples of the segment length; a trailing piece shorter than two
  // sample intervals is merged into its neighbour.
  std::vector<double> knots{0.0};
  while (knots.back() + segment_length < t_p - 2.0 * sample_dt) knots.push_back(knots.back() + segment_length);
  knots.push_back(t_p);
  const int segments = static_cast<int>(knots.size()) - 1;
  const int n_interior = segments - 1;
  const int n_unknowns = n_interior + segments;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(times.size()), n_unknowns);
  Eigen::VectorXd b(static_cast<long>(times.size()));
  int s = 0;
  for (std::size_t row = 0; row < times.size(); ++row) {
    const double t = times[row];
    while (s < segments - 1 && t >= knots[static_cast<std::size_t>(s) + 1]) ++s;
    const double lo = knots[static_cast<std::size_t>(s)];
    const double hi = knots[static_cast<std::size_t>(s) + 1];
    const double u = (t - lo) / (hi - lo);
    const auto r = static_cast<long>(row);
    b[r] = pulse(t);
    // left knot value
    if (s == 0) b[r] -= pulse.start() * (1.0 - u);
    else a(r, s - 1) = 1.0 - u;
    // right knot value
    if (s == segments - 1) b[r] -= pulse.end() * u;
    else a(r, s) = u;
    a(r, n_interior + s) = u * (1.0 - u);
  }
  const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);

  std::vector<double> values(times.size());
  s = 0;
  for (std::size_t row = 0; row < times.size(); ++row) {
    const double t = times[row];
    while (s < segments - 1 && t >= knots[static_cast<std::size_t>(s) + 1]) ++s;
    const double lo = knots[static_cast<std::size_t>(s)];
    const double hi = knots[static_cast<std::size_t>(s) + 1];
    const double u = (t - lo) / (hi - lo);
    const double left = s == 0 ? pulse.start() : sol[s - 1];
    const double right = s == segments - 1 ? pulse.end() : sol[s];
    values[row] = left * (1.0 - u) + right * u + sol[n_interior + s] * u * (1.0 - u);
  }
  values.front() = pulse.start();
  values.back() = pulse.end();
  return Pulse::sampled(std::move(times), std::move(values));
}

void write_pulse_csv(std::ostream& out, const Pulse& pulse, double dt, bool as_frequency) {
  out << (as_frequency ? "t_us,f_mhz\n" : "t_us,r_um\n");
  const auto r = pulse.sample(dt, pulse.duration());
  out << std::setprecision(17);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = std::min(static_cast<double>(k) * dt, pulse.duration());
    out << t << ',' << (as_frequency ? aod_frequency_of(r[k]) : r[k]) << '\n';
  }
}

Pulse read_pulse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty pulse file");
  bool frequency = false;
  if (line.find("f_mhz") != std::string::npos) frequency = true;
  else if (line.find("r_um") == std::string::npos)
    throw ConfigError("pulse file header must be t_us,r_um or t_us,f_mhz");
  std::vector<double> t, r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double a = 0, b = 0;
    char comma = 0;
    if (!(row >> a >> comma >> b) || comma != ',') throw ConfigError("malformed pulse row: " + line);
    t.push_back(a);
    r.push_back(frequency ? position_of_aod_frequency(b) : b);
  }
  return Pulse::sampled(std::move(t), std::move(r));
}

}  // namespace tweezer
