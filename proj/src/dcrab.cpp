#include "tweezer/dcrab.hpp"

#include "tweezer/error.hpp"
#include "tweezer/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace tweezer {

void DcrabConfig::validate() const {
  if (superiterations < 1) throw ConfigError("optimizer.superiterations must be at least 1");
  if (max_evaluations < 1) throw ConfigError("optimizer.max_evaluations must be at least 1");
  if (max_evaluations_per_superiteration < 0) throw ConfigError("optimizer.max_evaluations_per_superiteration must be >= 0");
  if (coefficients < 0) throw ConfigError("optimizer.coefficients must be >= 0");
  if (!(max_frequency_mhz > 0.0)) throw ConfigError("optimizer.max_frequency_mhz must be positive (empty band)");
  if (!(simplex_step_scale > 0.0) || !(simplex_step_coefficient > 0.0))
    throw ConfigError("optimizer simplex steps must be positive");
  if (!(constraint_sample_dt > 0.0)) throw ConfigError("optimizer.constraint_sample_dt must be positive");
}

int default_coefficient_count(double t_p_us) {
  if (t_p_us >= 20.0) return std::max(1, static_cast<int>(std::lround(t_p_us / 10.0)));
  return 4;
}

std::vector<BasisElement> make_basis(int index, int n_coefficients, double t_p_us, const DcrabConfig& config) {
  if (!(config.max_frequency_mhz > 0.0)) throw ConfigError("basis frequency band is empty");
  if (n_coefficients < 1) throw ConfigError("basis needs at least one element");
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x6463u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BasisElement> basis;
  for (int i = 0; i < n_coefficients; ++i) {
    BasisElement e;
    e.kind = config.basis;
    e.frequency_mhz = config.max_frequency_mhz * (1.0 - unit(rng));  // (0, f_max]
    const double u = unit(rng);
    if (e.kind == BasisElement::Kind::Fourier) e.offset = 2.0 * 3.14159265358979323846 * u;
    else e.offset = config.sinc_center == SincCenter::Random ? t_p_us * u : 0.5 * t_p_us;
    basis.push_back(e);
  }
  return basis;
}

Pulse constrain_pulse(const Pulse& pulse, PulseConstraint mode, double sample_dt) {
  switch (mode) {
    case PulseConstraint::None:
      return pulse;
    case PulseConstraint::PiecewiseQuadratic10us:
      return fit_piecewise_quadratic(pulse, 10.0, sample_dt);
  }
  return pulse;
}

OptimizationRecord optimize(const Pulse& initial, const PulseObjective& objective, const DcrabConfig& config) {
  config.validate();
  const double t_p = initial.duration();
  const int n_c = config.coefficients > 0 ? config.coefficients : default_coefficient_count(t_p);

  OptimizationRecord rec(initial);
  auto evaluate = [&](const Pulse& candidate) {
    const double f = objective(constrain_pulse(candidate, config.constraint, config.constraint_sample_dt));
    rec.evaluations.push_back(f);
    return f;
  };

  rec.initial_fom = evaluate(initial);
  rec.best_fom = rec.initial_fom;
  int quiet = 0;
  rec.stop_reason = "superiterations done";

  for (int j = 0; j < config.superiterations; ++j) {
    const int remaining = config.max_evaluations - static_cast<int>(rec.evaluations.size());
    if (remaining <= 0) {
      rec.stop_reason = "budget exhausted";
      break;
    }
    if (config.target_fom > 0.0 && rec.best_fom <= config.target_fom) {
      rec.stop_reason = "target reached";
      break;
    }
    const auto basis = make_basis(j, n_c, t_p, config);
    const Pulse previous = rec.best;
    auto build = [&](const std::vector<double>& c) {
      return Pulse::dressed(previous, c[0], std::vector<double>(c.begin() + 1, c.end()), basis);
    };

    NelderMeadOptions nm;
    nm.initial_step.assign(static_cast<std::size_t>(n_c) + 1, config.simplex_step_coefficient);
    nm.initial_step[0] = config.simplex_step_scale;
    nm.max_evaluations = config.max_evaluations_per_superiteration > 0
                             ? std::min(remaining, config.max_evaluations_per_superiteration)
                             : remaining;
    nm.stall_relative = config.stall_relative;
    nm.stall_window = config.stall_window;
    std::vector<double> x0(static_cast<std::size_t>(n_c) + 1, 0.0);
    x0[0] = 1.0;

    rec.superiteration_first_eval.push_back(static_cast<int>(rec.evaluations.size()));
    const auto result = nelder_mead([&](const std::vector<double>& c) { return evaluate(build(c)); }, x0, nm);
    const double before = rec.best_fom;
    if (result.value < rec.best_fom) {
      rec.best_fom = result.value;
      rec.best = build(result.x);
    }
    rec.superiteration_best.push_back(rec.best_fom);

    if (before - rec.best_fom <= config.stall_relative * before) ++quiet;
    else quiet = 0;
    if (config.stall_superiterations > 0 && quiet >= config.stall_superiterations) {
      rec.stop_reason = "stalled";
      break;
    }
  }
  if (config.target_fom > 0.0 && rec.best_fom <= config.target_fom) rec.stop_reason = "target reached";
  rec.best = constrain_pulse(rec.best, config.constraint, config.constraint_sample_dt);
  return rec;
}

void write_evaluations_csv(std::ostream& out, const OptimizationRecord& record) {
  out << "eval,fom\n" << std::setprecision(12);
  for (std::size_t i = 0; i < record.evaluations.size(); ++i) out << i << ',' << record.evaluations[i] << '\n';
}

void write_superiterations_csv(std::ostream& out, const OptimizationRecord& record) {
  out << "superiteration,first_eval,best_fom\n" << std::setprecision(12);
  for (std::size_t j = 0; j < record.superiteration_best.size(); ++j)
    out << j << ',' << record.superiteration_first_eval[j] << ',' << record.superiteration_best[j] << '\n';
}

}  // namespace tweezer
