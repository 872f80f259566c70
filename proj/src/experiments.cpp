#include "tweezer/experiments.hpp"

#include "tweezer/error.hpp"
#include "tweezer/parallel.hpp"
#include "tweezer/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace tweezer {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool smooth(int n) {
  for (int p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// Copy whose evaluations run single-threaded, for use inside an outer worker pool.
TransportProblem serial_copy(const TransportProblem& problem) {
  TransportProblem copy = problem;
  copy.scenario.workers = 1;
  return copy;
}

}  // namespace

int fast_fft_size(int n_min) {
  int n = std::max(16, n_min + (n_min % 2));
  while (!smooth(n)) n += 2;
  return n;
}

GridSpec covering_grid(double lo_um, double hi_um, double dx_um) {
  if (!(hi_um > lo_um) || !(dx_um > 0.0)) throw ConfigError("covering grid needs hi > lo and dx > 0");
  const int n = fast_fft_size(static_cast<int>(std::ceil((hi_um - lo_um) / dx_um - 1e-9)));
  return {lo_um, lo_um + n * dx_um, n};
}

Scenario Scenario::with_distance(double d_um) const {
  if (!(d_um >= 0.0)) throw ConfigError("transport distance must be non-negative");
  Scenario s = *this;
  const double left = start_um() - grid.x_min_um;
  const double right = grid.x_max_um - end_um();
  s.distance_um = d_um;
  if (d_um != distance_um) s.grid = covering_grid(start_um() - left, start_um() + d_um + right, grid.dx());
  return s;
}

Pulse TransportProblem::guess(double t_p_us) const {
  return Pulse::piecewise_quadratic(scenario.start_um(), scenario.end_um(), t_p_us);
}

TransportSettings TransportProblem::settings(const NoiseRealization* noise) const {
  TransportSettings s;
  s.dt = scenario.dt_us;
  s.hold_us = scenario.hold_us;
  s.workers = scenario.workers;
  s.noise = noise;
  s.units = scenario.units;
  return s;
}

FomRecord TransportProblem::evaluate(const Pulse& pulse, const NoiseRealization* noise) const {
  return time_averaged_fom(initial, target, scenario.trap, pulse, settings(noise));
}

double TransportProblem::fom(const Pulse& pulse, const NoiseRealization* noise) const {
  return evaluate(pulse, noise).average;
}

TransportProblem prepare_transport(const Scenario& scenario) {
  if (scenario.n_states < 1) throw ConfigError("physics.n_states must be at least 1");
  if (!(scenario.dt_us > 0.0)) throw ConfigError("numerics.dt_us must be positive");
  if (!(scenario.hold_us >= 0.0)) throw ConfigError("numerics.hold_us must be non-negative");
  if (!(scenario.distance_um >= 0.0)) throw ConfigError("physics.distance_um must be non-negative");
  TransportProblem p;
  p.scenario = scenario;
  p.grid = scenario.grid.make();
  p.spectrum = solve_spectrum(scenario.trap, p.grid, scenario.n_states, {}, scenario.units);
  p.initial = thermal_ensemble(p.spectrum, scenario.temperature_uk, scenario.n_states);
  p.target = shifted_ensemble(p.initial, scenario.distance_um);
  return p;
}

double kinematic_time_bound(const TrapParams& trap, double distance_um, const UnitSystem& units) {
  if (!(distance_um >= 0.0)) throw ConfigError("distance must be non-negative");
  if (!(trap.waist_um > 0.0)) throw ConfigError("trap waist must be positive");
  const double force = std::abs(trap.depth_internal(units)) * 2.0 / trap.waist_um * std::exp(-0.5);
  const double accel = force / units.mass_over_hbar();
  if (!(accel > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 * std::sqrt(distance_um / accel);
}

std::string to_string(PulseKind kind) { return kind == PulseKind::Optimal ? "oc" : "pq"; }

PulseKind pulse_kind_from_string(const std::string& name) {
  if (name == "pq") return PulseKind::PiecewiseQuadratic;
  if (name == "oc") return PulseKind::Optimal;
  throw ConfigError("pulse kind must be 'pq' or 'oc', got '" + name + "'");
}

ScanResult scan_problem(const TransportProblem& problem, std::span<const double> t_p_grid_us,
                        const ScanOptions& options) {
  const int n = static_cast<int>(t_p_grid_us.size());
  const int workers = std::clamp(resolve_workers(options.workers), 1, std::max(1, n));
  const TransportProblem local = workers > 1 ? serial_copy(problem) : problem;

  std::vector<ScanPoint> points(static_cast<std::size_t>(n));
  auto run_point = [&](int i) {
    auto& pt = points[static_cast<std::size_t>(i)];
    pt.temperature_uk = local.scenario.temperature_uk;
    pt.distance_um = local.scenario.distance_um;
    pt.t_p_us = t_p_grid_us[static_cast<std::size_t>(i)];
    try {
      const Pulse guess = local.guess(pt.t_p_us);
      if (options.kind == PulseKind::PiecewiseQuadratic) {
        pt.j_avg = local.fom(guess);
        pt.evaluations = 1;
        pt.pulse = guess;
        return;
      }
      DcrabConfig config = options.optimizer;
      config.seed = options.optimizer.seed + static_cast<std::uint64_t>(i);
      if (options.stop_at_threshold) config.target_fom = std::nextafter(options.threshold, 0.0);
      const auto rec = optimize(guess, [&](const Pulse& p) { return local.fom(p); }, config);
      pt.j_avg = rec.best_fom;
      pt.evaluations = static_cast<int>(rec.evaluations.size());
      pt.pulse = rec.best;
    } catch (const std::exception& e) {
      pt.j_avg = kNaN;
      pt.error = e.what();
    }
  };

  if (!options.stop_at_threshold) {
    parallel_for(n, workers, run_point);
  } else {
    for (int lo = 0; lo < n; lo += workers) {
      const int hi = std::min(n, lo + workers);
      parallel_for(hi - lo, workers, [&](int k) { run_point(lo + k); });
      const bool hit = std::any_of(points.begin() + lo, points.begin() + hi,
                                   [&](const ScanPoint& p) { return p.j_avg < options.threshold; });
      if (hit) {
        points.resize(static_cast<std::size_t>(hi));
        break;
      }
    }
  }
  return {options.kind, std::move(points)};
}

ScanResult scan_time_vs_fom(const Scenario& base, std::span<const double> temperatures_uk,
                            std::span<const double> t_p_grid_us, const ScanOptions& options) {
  ScanResult out{options.kind, {}};
  for (std::size_t ti = 0; ti < temperatures_uk.size(); ++ti) {
    Scenario s = base;
    s.temperature_uk = temperatures_uk[ti];
    ScanOptions o = options;
    o.optimizer.seed = options.optimizer.seed + ti * t_p_grid_us.size();
    auto scan = scan_problem(prepare_transport(s), t_p_grid_us, o);
    std::move(scan.points.begin(), scan.points.end(), std::back_inserter(out.points));
  }
  return out;
}

std::optional<double> extract_t_min(std::span<const ScanPoint> points, double threshold) {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].t_p_us < points[i - 1].t_p_us) throw ConfigError("scan points must be sorted by t_p");
  for (const auto& p : points)
    if (std::isfinite(p.j_avg) && p.j_avg < threshold) return p.t_p_us;
  return std::nullopt;
}

std::vector<double> local_minima(std::span<const ScanPoint> points) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const double l = points[i - 1].j_avg, c = points[i].j_avg, r = points[i + 1].j_avg;
    if (std::isfinite(l) && std::isfinite(c) && std::isfinite(r) && c < l && c < r) out.push_back(points[i].t_p_us);
  }
  return out;
}

std::vector<ImprovementPoint> improvement_ratio(const ScanResult& pq, const ScanResult& oc) {
  if (pq.points.size() != oc.points.size()) throw DimensionError("improvement ratio needs matching scan grids");
  std::vector<ImprovementPoint> out;
  for (std::size_t i = 0; i < pq.points.size(); ++i) {
    const auto& a = pq.points[i];
    const auto& b = oc.points[i];
    if (std::abs(a.t_p_us - b.t_p_us) > 1e-9 || std::abs(a.temperature_uk - b.temperature_uk) > 1e-9)
      throw DimensionError("improvement ratio needs matching scan grids");
    out.push_back({a.temperature_uk, a.t_p_us, a.j_avg, b.j_avg, (a.j_avg - b.j_avg) / a.j_avg});
  }
  return out;
}

NoiseEnsembleResult noise_ensemble(const TransportProblem& problem, const Pulse& pulse, int n_runs,
                                   const NoiseSpec& spec) {
  if (n_runs < 1) throw ConfigError("noise ensemble needs at least one run");
  spec.validate();
  NoiseEnsembleResult res;
  res.noiseless = problem.fom(pulse);
  const int steps = transport_steps(pulse, problem.settings());
  const int workers = std::clamp(resolve_workers(problem.scenario.workers), 1, n_runs);
  const TransportProblem local = workers > 1 ? serial_copy(problem) : problem;
  res.j_avg.assign(static_cast<std::size_t>(n_runs), 0.0);
  parallel_for(n_runs, workers, [&](int r) {
    const auto noise = sample_realization(spec, local.scenario.dt_us, steps, static_cast<std::uint64_t>(r));
    res.j_avg[static_cast<std::size_t>(r)] = local.fom(pulse, &noise);
  });
  res.mean = std::accumulate(res.j_avg.begin(), res.j_avg.end(), 0.0) / n_runs;
  double ss = 0.0;
  for (double j : res.j_avg) ss += (j - res.mean) * (j - res.mean);
  res.stddev = n_runs > 1 ? std::sqrt(ss / (n_runs - 1)) : 0.0;
  return res;
}

double curve_distance(const RecaptureCurve& a, const RecaptureCurve& b) {
  if (a.tau_us.size() != b.tau_us.size()) throw DimensionError("recapture curves on different tau grids");
  double m = 0.0;
  for (std::size_t i = 0; i < a.probability.size(); ++i) {
    if (std::abs(a.tau_us[i] - b.tau_us[i]) > 1e-12) throw DimensionError("recapture curves on different tau grids");
    m = std::max(m, std::abs(a.probability[i] - b.probability[i]));
  }
  return m;
}

RecaptureSweep recapture_sweep(const TransportProblem& problem, const Pulse& pq, const Pulse& oc,
                               const Pulse* oc_rerun, const RecaptureOptions& options) {
  if (options.transports.empty()) throw ConfigError("recapture sweep needs at least one N_t");
  std::vector<double> tau = options.tau_us;
  if (tau.empty())
    for (int i = 0; i <= 20; ++i) tau.push_back(2.0 * i);
  const auto& sc = problem.scenario;
  auto curve = [&](const Pulse& pulse, int transports) {
    const auto states = multi_transport(problem.initial.states, sc.trap, pulse, transports, sc.dt_us, sc.workers,
                                        sc.units);
    return recapture_curve(problem.initial.weights, states, sc.trap.waist_um, sc.end_um(), tau, transports,
                           options.central_fraction, sc.units);
  };

  RecaptureSweep sweep;
  for (int nt : options.transports) {
    RecaptureComparison c{nt, curve(pq, nt), curve(oc, nt), 0.0};
    c.metric = curve_distance(c.pq, c.oc);
    sweep.comparisons.push_back(std::move(c));
  }
  if (oc_rerun) {
    const auto single = std::find_if(sweep.comparisons.begin(), sweep.comparisons.end(),
                                     [](const RecaptureComparison& c) { return c.transports == 1; });
    const RecaptureCurve base = single != sweep.comparisons.end() ? single->oc : curve(oc, 1);
    sweep.rerun = curve(*oc_rerun, 1);
    sweep.floor = options.floor_factor * curve_distance(base, *sweep.rerun);
  }
  return sweep;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("line fit needs equal-length inputs");
  LineFit f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / f.n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / f.n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = syy - f.slope * sxy;
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

DistanceScan qsl_vs_distance(const Scenario& base, std::span<const double> distances_um,
                             std::span<const double> t_p_grid_us, const ScanOptions& options) {
  DistanceScan out;
  out.kind = options.kind;
  ScanOptions o = options;
  o.stop_at_threshold = true;
  for (std::size_t di = 0; di < distances_um.size(); ++di) {
    const double d = distances_um[di];
    const auto problem = prepare_transport(base.with_distance(d));
    const double lower = std::floor(kinematic_time_bound(base.trap, d, base.units));
    std::vector<double> grid;
    for (double t : t_p_grid_us)
      if (t >= lower) grid.push_back(t);
    o.optimizer.seed = options.optimizer.seed + di * t_p_grid_us.size();
    DistancePoint pt;
    pt.distance_um = d;
    pt.scan = scan_problem(problem, grid, o);
    pt.t_min_us = extract_t_min(pt.scan.points, o.threshold);
    for (const auto& p : pt.scan.points) pt.evaluations += p.evaluations;
    out.points.push_back(std::move(pt));
  }
  std::vector<double> xs, ys;
  for (const auto& p : out.points)
    if (p.t_min_us) {
      xs.push_back(p.distance_um);
      ys.push_back(*p.t_min_us);
    }
  out.fit = fit_line(xs, ys);
  return out;
}

std::string to_string(ConvergenceProperty property) {
  switch (property) {
    case ConvergenceProperty::TimeStep: return "dt";
    case ConvergenceProperty::GridSpacing: return "dx";
    case ConvergenceProperty::Extent: return "extent";
    case ConvergenceProperty::StateCutoff: return "n_states";
  }
  return "dt";
}

ConvergenceProperty convergence_property_from_string(const std::string& name) {
  for (auto p : {ConvergenceProperty::TimeStep, ConvergenceProperty::GridSpacing, ConvergenceProperty::Extent,
                 ConvergenceProperty::StateCutoff})
    if (to_string(p) == name) return p;
  throw ConfigError("convergence property must be dt, dx, extent or n_states, got '" + name + "'");
}

namespace {

// Transport window [r0 - margin, r_f + margin] with the requested extent.
GridPtr transport_grid(const ConvergenceOptions& o, int n_points) {
  const double margin = 0.5 * (o.base_extent_um - o.distance_um);
  if (!(margin > 0.0)) throw ConfigError("convergence extent must exceed the transport distance");
  return make_grid(o.trap.center_um - margin, o.trap.center_um + o.distance_um + margin, n_points);
}

// The ground state is confined to a few 10 nm, so a half-waist window suffices.
WaveFunction ground_state(const ConvergenceOptions& o, const GridPtr& grid) {
  SpectrumOptions window;
  window.window_halfwidth_um = 0.5 * o.trap.waist_um;
  return solve_spectrum(o.trap, grid, 1, window, o.units).states.front();
}

WaveFunction transported(const ConvergenceOptions& o, const WaveFunction& psi0, double dt) {
  const Pulse pulse = Pulse::piecewise_quadratic(o.trap.center_um, o.trap.center_um + o.distance_um, o.t_p_us);
  return evolve(psi0, EvolutionPlan::from_pulse(o.trap, pulse, dt, o.t_p_us), o.units).state;
}

// |dx sum conj(a[offset_a + stride_a j]) b[offset_b + j]|^2 over the points of b.
double sampled_fidelity(const WaveFunction& a, int offset_a, int stride_a, const WaveFunction& b, int offset_b,
                        int count) {
  cplx s = 0.0;
  const auto& va = a.amplitudes();
  const auto& vb = b.amplitudes();
  for (int j = 0; j < count; ++j) s += std::conj(va[offset_a + stride_a * j]) * vb[offset_b + j];
  return std::norm(s * b.grid().dx());
}

int grid_points(double extent, double dx) {
  const int n = static_cast<int>(std::lround(extent / dx));
  if (std::abs(n * dx - extent) > 1e-9 * extent || n % 2 != 0)
    throw ConfigError("convergence extent must be an even multiple of dx");
  return n;
}

}  // namespace

ConvergenceResult convergence_study(ConvergenceProperty property, const ConvergenceOptions& o) {
  if (o.factors.empty()) throw ConfigError("convergence study needs at least one factor");
  for (int s : o.factors)
    if (s < 1 || o.reference_factor % s != 0)
      throw ConfigError("convergence factors must divide the reference factor");
  ConvergenceResult res;
  res.property = property;
  const int n0 = grid_points(o.base_extent_um, o.base_dx_um);

  switch (property) {
    case ConvergenceProperty::TimeStep: {
      const auto grid = transport_grid(o, n0);
      const auto psi0 = ground_state(o, grid);
      const auto ref = transported(o, psi0, o.base_dt_us / o.reference_factor);
      for (int s : o.factors) {
        const double dt = o.base_dt_us / s;
        res.points.push_back({s, dt, 1.0 - std::norm(inner_product(ref, transported(o, psi0, dt)))});
      }
      break;
    }
    case ConvergenceProperty::GridSpacing: {
      const auto ref_grid = transport_grid(o, n0 * o.reference_factor);
      const auto ref = transported(o, ground_state(o, ref_grid), o.base_dt_us);
      for (int s : o.factors) {
        const auto grid = transport_grid(o, n0 * s);
        const auto psi = transported(o, ground_state(o, grid), o.base_dt_us);
        res.points.push_back(
            {s, grid->dx(), 1.0 - sampled_fidelity(ref, 0, o.reference_factor / s, psi, 0, grid->size())});
      }
      break;
    }
    case ConvergenceProperty::Extent: {
      auto run = [&](int s) {
        const double half = 0.5 * s * o.base_extent_um;
        const auto grid = make_grid(o.trap.center_um - half, o.trap.center_um + half, n0 * s);
        const auto released = free_evolve(ground_state(o, grid), o.release_us, o.units);
        return evolve(released, EvolutionPlan::static_trap(o.trap, o.base_dt_us, o.recapture_us), o.units).state;
      };
      const auto ref = run(o.reference_factor);
      for (int s : o.factors) {
        const auto psi = run(s);
        const int offset = (o.reference_factor - s) * n0 / 2;
        res.points.push_back({s, s * o.base_extent_um, 1.0 - sampled_fidelity(ref, offset, 1, psi, 0, psi.grid().size())});
      }
      break;
    }
    case ConvergenceProperty::StateCutoff: {
      const auto grid = make_grid(o.trap.center_um - 0.5 * o.base_extent_um, o.trap.center_um + 0.5 * o.base_extent_um, n0);
      const int n_ref = o.base_states * o.reference_factor;
      const auto spectrum = solve_spectrum(o.trap, grid, n_ref, {}, o.units);
      const auto q = boltzmann_weights(spectrum.energies, o.temperature_uk, n_ref);
      for (int s : o.factors) {
        const auto p = boltzmann_weights(spectrum.energies, o.temperature_uk, o.base_states * s);
        res.points.push_back({s, static_cast<double>(o.base_states * s), 1.0 - cutoff_fidelity(p, q)});
      }
      break;
    }
  }

  res.monotone = true;
  for (std::size_t i = 1; i < res.points.size(); ++i)
    if (!(res.points[i].infidelity < res.points[i - 1].infidelity)) res.monotone = false;
  std::vector<double> lx, ly;
  for (const auto& p : res.points)
    if (p.infidelity > 0.0) {
      lx.push_back(std::log(p.parameter));
      ly.push_back(std::log(p.infidelity));
    }
  res.slope = lx.size() >= 2 ? fit_line(lx, ly).slope : kNaN;
  return res;
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "kind,temperature_uk,distance_um,t_p_us,j_avg,evaluations,error\n" << std::setprecision(12);
  for (const auto& p : scan.points)
    out << to_string(scan.kind) << ',' << p.temperature_uk << ',' << p.distance_um << ',' << p.t_p_us << ','
        << p.j_avg << ',' << p.evaluations << ',' << csv_safe(p.error) << '\n';
}

void write_improvement_csv(std::ostream& out, std::span<const ImprovementPoint> points) {
  out << "temperature_uk,t_p_us,j_pq,j_oc,improvement\n" << std::setprecision(12);
  for (const auto& p : points)
    out << p.temperature_uk << ',' << p.t_p_us << ',' << p.j_pq << ',' << p.j_oc << ',' << p.ratio << '\n';
}

void write_noise_ensemble_csv(std::ostream& out, const NoiseEnsembleResult& result) {
  out << "run,j_avg\n" << std::setprecision(12);
  for (std::size_t r = 0; r < result.j_avg.size(); ++r) out << r << ',' << result.j_avg[r] << '\n';
}

void write_recapture_sweep_csv(std::ostream& out, const RecaptureSweep& sweep) {
  out << "pulse,n_transports,tau_us,probability\n" << std::setprecision(12);
  auto rows = [&](const std::string& label, const RecaptureCurve& c) {
    for (std::size_t i = 0; i < c.tau_us.size(); ++i)
      out << label << ',' << c.transports << ',' << c.tau_us[i] << ',' << c.probability[i] << '\n';
  };
  for (const auto& c : sweep.comparisons) {
    rows("pq", c.pq);
    rows("oc", c.oc);
  }
  if (sweep.rerun) rows("oc_rerun", *sweep.rerun);
}

void write_distance_csv(std::ostream& out, const DistanceScan& scan) {
  out << "kind,distance_um,t_min_us,evaluations\n" << std::setprecision(12);
  for (const auto& p : scan.points) {
    out << to_string(scan.kind) << ',' << p.distance_um << ',';
    if (p.t_min_us) out << *p.t_min_us;
    out << ',' << p.evaluations << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceResult& result) {
  out << "property,factor,parameter,infidelity\n" << std::setprecision(12);
  for (const auto& p : result.points)
    out << to_string(result.property) << ',' << p.factor << ',' << p.parameter << ',' << p.infidelity << '\n';
}

}  // namespace tweezer
