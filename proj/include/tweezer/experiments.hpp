#pragma once

#include "tweezer/dcrab.hpp"
#include "tweezer/fidelity.hpp"
#include "tweezer/grid.hpp"
#include "tweezer/noise.hpp"
#include "tweezer/pulse.hpp"
#include "tweezer/spectrum.hpp"
#include "tweezer/trap.hpp"
#include "tweezer/units.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tweezer {

struct GridSpec {
  double x_min_um = -5.0;
  double x_max_um = 5.0;
  int n_points = 5000;

  [[nodiscard]] double dx() const { return (x_max_um - x_min_um) / n_points; }
  [[nodiscard]] GridPtr make() const { return make_grid(x_min_um, x_max_um, n_points); }
};

/// Smallest even n >= n_min whose prime factors are all in {2, 3, 5, 7}.
int fast_fft_size(int n_min);

/// Grid with spacing at most dx_um covering [lo_um, hi_um], n rounded up to a fast FFT size.
GridSpec covering_grid(double lo_um, double hi_um, double dx_um);

/// One transport setting: trap at r0 = trap.center_um moved to r0 + distance.
struct Scenario {
  UnitSystem units;
  TrapParams trap;
  double distance_um = 3.0;
  double temperature_uk = 1.0;
  int n_states = 8;
  GridSpec grid;
  double dt_us = 0.1;
  double hold_us = 10.0;
  int workers = 1;

  [[nodiscard]] double start_um() const { return trap.center_um; }
  [[nodiscard]] double end_um() const { return trap.center_um + distance_um; }
  [[nodiscard]] Scenario with_distance(double d_um) const;
};

/// Spectrum, thermal ensemble and shifted target, ready for pulse evaluation.
struct TransportProblem {
  Scenario scenario;
  GridPtr grid;
  TrapSpectrum spectrum;
  ThermalEnsemble initial;
  ThermalEnsemble target;

  [[nodiscard]] Pulse guess(double t_p_us) const;
  [[nodiscard]] TransportSettings settings(const NoiseRealization* noise = nullptr) const;
  [[nodiscard]] FomRecord evaluate(const Pulse& pulse, const NoiseRealization* noise = nullptr) const;
  [[nodiscard]] double fom(const Pulse& pulse, const NoiseRealization* noise = nullptr) const;
};

TransportProblem prepare_transport(const Scenario& scenario);

/// Shortest time in which a point mass with the trap's maximal acceleration
/// |U0| (2 / w0) e^{-1/2} / m starts and ends at rest a distance d apart (bang-bang).
/// By Ehrenfest's theorem the mean position obeys the same bound.
double kinematic_time_bound(const TrapParams& trap, double distance_um, const UnitSystem& units = {});

enum class PulseKind { PiecewiseQuadratic, Optimal };
std::string to_string(PulseKind kind);
PulseKind pulse_kind_from_string(const std::string& name);

struct ScanPoint {
  double temperature_uk = 0.0;
  double distance_um = 0.0;
  double t_p_us = 0.0;
  double j_avg = 0.0;  // NaN if the point failed
  int evaluations = 0;
  std::string error;
  std::optional<Pulse> pulse;
};

struct ScanResult {
  PulseKind kind = PulseKind::PiecewiseQuadratic;
  std::vector<ScanPoint> points;
};

struct ScanOptions {
  PulseKind kind = PulseKind::PiecewiseQuadratic;
  DcrabConfig optimizer;
  /// Stop a temperature's scan at the first t_p with J_avg < threshold; the optimizer
  /// then also stops as soon as it gets below the threshold.
  bool stop_at_threshold = false;
  double threshold = 1e-2;
  int workers = 1;
};

/// J_avg for every (T, t_p). Optimal points start dCRAB from the pq guess with seed
/// optimizer.seed + row index. Failures are recorded per point and the scan continues.
ScanResult scan_time_vs_fom(const Scenario& base, std::span<const double> temperatures_uk,
                            std::span<const double> t_p_grid_us, const ScanOptions& options);

/// Same scan for one prepared problem (its temperature and distance).
ScanResult scan_problem(const TransportProblem& problem, std::span<const double> t_p_grid_us,
                        const ScanOptions& options);

/// Smallest t_p with J_avg < threshold. Points must be sorted by t_p.
std::optional<double> extract_t_min(std::span<const ScanPoint> points, double threshold = 1e-2);

/// Local minima of J_avg over the grid (interior points below both neighbours).
std::vector<double> local_minima(std::span<const ScanPoint> points);

struct ImprovementPoint {
  double temperature_uk = 0.0;
  double t_p_us = 0.0;
  double j_pq = 0.0;
  double j_oc = 0.0;
  double ratio = 0.0;  // (J_pq - J_oc) / J_pq
};
std::vector<ImprovementPoint> improvement_ratio(const ScanResult& pq, const ScanResult& oc);

struct NoiseEnsembleResult {
  std::vector<double> j_avg;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double noiseless = 0.0;
};

/// J_avg under n_runs realizations; realization r uses noise stream r of spec.seed.
NoiseEnsembleResult noise_ensemble(const TransportProblem& problem, const Pulse& pulse, int n_runs,
                                   const NoiseSpec& spec);

struct RecaptureComparison {
  int transports = 1;
  RecaptureCurve pq;
  RecaptureCurve oc;
  double metric = 0.0;  // max over tau of |P_pq - P_oc|
};

struct RecaptureSweep {
  std::vector<RecaptureComparison> comparisons;
  /// 3 x max_tau |P_oc - P_oc'| at N_t = 1 between two independently seeded optimizations.
  double floor = 0.0;
  std::optional<RecaptureCurve> rerun;
};

struct RecaptureOptions {
  std::vector<int> transports{1, 21, 41};
  std::vector<double> tau_us;  // empty selects 0, 2, ..., 40
  double central_fraction = kRecaptureCentralFraction;
  double floor_factor = 3.0;
};

double curve_distance(const RecaptureCurve& a, const RecaptureCurve& b);

/// Release-and-capture curves for pq and oc after N_t transports. oc_rerun, if given,
/// is a second, independently seeded optimal pulse and defines the floor.
RecaptureSweep recapture_sweep(const TransportProblem& problem, const Pulse& pq, const Pulse& oc,
                               const Pulse* oc_rerun, const RecaptureOptions& options);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n = 0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct DistancePoint {
  double distance_um = 0.0;
  std::optional<double> t_min_us;
  int evaluations = 0;
  ScanResult scan;
};

struct DistanceScan {
  PulseKind kind = PulseKind::PiecewiseQuadratic;
  std::vector<DistancePoint> points;
  LineFit fit;  // t_min against d over points with a t_min
};

/// t_min(d). Each distance gets a grid with the base spacing and margins; the t_p scan
/// starts at the larger of the grid start and floor(kinematic_time_bound) and stops at
/// the first point below the threshold.
DistanceScan qsl_vs_distance(const Scenario& base, std::span<const double> distances_um,
                             std::span<const double> t_p_grid_us, const ScanOptions& options);

enum class ConvergenceProperty { TimeStep, GridSpacing, Extent, StateCutoff };
std::string to_string(ConvergenceProperty property);
ConvergenceProperty convergence_property_from_string(const std::string& name);

struct ConvergenceOptions {
  UnitSystem units;
  TrapParams trap;
  double base_dt_us = 0.5;
  double base_dx_um = 0.005;
  double base_extent_um = 5.0;
  int base_states = 2;
  std::vector<int> factors{1, 2, 4};
  int reference_factor = 8;
  double distance_um = 3.0;
  double t_p_us = 40.0;        // pq transport for the dt and dx studies
  double release_us = 10.0;    // extent study: trap off
  double recapture_us = 10.0;  // extent study: trap back on
  double temperature_uk = 10.0;  // state-cutoff study
};

struct ConvergencePoint {
  int factor = 1;
  double parameter = 0.0;  // dt, dx, extent or N_s of this run
  double infidelity = 0.0;
};

struct ConvergenceResult {
  ConvergenceProperty property = ConvergenceProperty::TimeStep;
  std::vector<ConvergencePoint> points;
  double slope = 0.0;  // log-log slope of infidelity against the parameter
  bool monotone = false;  // infidelity decreases with every refinement
};

/// I(s) = 1 - F(s) against the reference run at reference_factor. dt refines as dt/s,
/// dx as dx/s (same extent), the extent as s L (same dx), the cutoff as s N_s.
ConvergenceResult convergence_study(ConvergenceProperty property, const ConvergenceOptions& options);

void write_scan_csv(std::ostream& out, const ScanResult& scan);
void write_improvement_csv(std::ostream& out, std::span<const ImprovementPoint> points);
void write_noise_ensemble_csv(std::ostream& out, const NoiseEnsembleResult& result);
void write_recapture_sweep_csv(std::ostream& out, const RecaptureSweep& sweep);
void write_distance_csv(std::ostream& out, const DistanceScan& scan);
void write_convergence_csv(std::ostream& out, const ConvergenceResult& result);

}  // namespace tweezer
