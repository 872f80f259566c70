#pragma once

#include "tweezer/pulse.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

namespace tweezer {

enum class PulseConstraint { None, PiecewiseQuadratic10us };

/// Placement of sinc elements: all at t_p/2, or each uniform in [0, t_p].
enum class SincCenter { Midpoint, Random };

struct DcrabConfig {
  int superiterations = 30;
  int max_evaluations = 5000;          // shared by all superiterations
  int max_evaluations_per_superiteration = 0;  // 0: limited by the shared budget only
  int coefficients = 0;                // N_c; 0 picks round(t_p / 10) for t_p >= 20 us, else 4
  BasisElement::Kind basis = BasisElement::Kind::Sinc;
  SincCenter sinc_center = SincCenter::Random;
  double max_frequency_mhz = 1.0;
  std::uint64_t seed = 1;

  double simplex_step_scale = 1.0;     // initial simplex step on c0
  double simplex_step_coefficient = 0.1;  // initial simplex step on c_i, um
  double stall_relative = 1e-4;
  int stall_window = 50;
  /// Stop after this many consecutive superiterations without a relative gain of
  /// stall_relative. 0 disables.
  int stall_superiterations = 0;
  /// Stop as soon as the best figure of merit drops to this value.
  double target_fom = 0.0;

  PulseConstraint constraint = PulseConstraint::None;
  double constraint_sample_dt = 0.1;

  /// Throws ConfigError.
  void validate() const;
};

/// Number of coefficients per superiteration for a pulse of duration t_p.
int default_coefficient_count(double t_p_us);

/// N_c basis elements for superiteration `index` with frequencies uniform in (0, f_max].
/// Sinc centers follow config.sinc_center; Fourier phases are uniform. Deterministic in (seed, index).
std::vector<BasisElement> make_basis(int index, int n_coefficients, double t_p_us, const DcrabConfig& config);

/// Applies the configured pulse-shape constraint (identity for None).
Pulse constrain_pulse(const Pulse& pulse, PulseConstraint mode, double sample_dt = 0.1);

struct OptimizationRecord {
  explicit OptimizationRecord(const Pulse& guess) : initial(guess), best(guess) {}

  std::vector<double> evaluations;        // raw figure of merit per call
  std::vector<int> superiteration_first_eval;
  std::vector<double> superiteration_best;  // best-so-far after each superiteration
  Pulse initial;
  Pulse best;
  double initial_fom = 0.0;
  double best_fom = 0.0;
  std::string stop_reason;
};

using PulseObjective = std::function<double(const Pulse&)>;

/// dCRAB: at superiteration j, minimize the objective over (c0, c1..c_Nc) of
///   r^j = line + c0 (r^{j-1} - line) + sum_i c_i e_i^j(t)
/// with a Nelder-Mead simplex started at (1, 0, ..., 0). The new pulse replaces
/// r^{j-1} only if it improves the figure of merit.
OptimizationRecord optimize(const Pulse& initial, const PulseObjective& objective, const DcrabConfig& config);

/// CSV exports: "eval,fom" and "superiteration,first_eval,best_fom".
void write_evaluations_csv(std::ostream& out, const OptimizationRecord& record);
void write_superiterations_csv(std::ostream& out, const OptimizationRecord& record);

}  // namespace tweezer
