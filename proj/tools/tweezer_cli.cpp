// Command-line driver for the transport experiments.

#include "tweezer/config.hpp"
#include "tweezer/dcrab.hpp"
#include "tweezer/error.hpp"
#include "tweezer/experiments.hpp"
#include "tweezer/parallel.hpp"
#include "tweezer/propagator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tweezer;

namespace {

constexpr int kSchemaVersion = 1;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> t_p;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::vector<double> temperatures;
  std::optional<std::string> kind;
  std::optional<std::string> pulse_file;
  std::optional<int> n_points;
  std::optional<double> x_min, x_max, dt, depth, distance, hold;
  std::optional<int> n_states, runs, max_evals, superiterations;
  std::optional<std::string> property;
  std::vector<double> t_p_grid;
  std::vector<double> distances;
  std::vector<int> transports;
};

struct Extras {
  bool trajectories = false;
  bool write_pulses = false;
  bool no_floor = false;
  int under_noise = 0;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Run seed (optimizer and noise)");
  app->add_option("--t-p", o.t_p, "Pulse duration in us");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  app->add_option("--temperature", o.temperatures, "Temperature(s) in uK");
  app->add_option("--kind", o.kind, "Pulse kind: pq or oc");
  app->add_option("--pulse", o.pulse_file, "Pulse CSV (t_us,r_um or t_us,f_mhz)");
  app->add_option("--n-points", o.n_points, "Grid points");
  app->add_option("--x-min", o.x_min, "Grid start in um");
  app->add_option("--x-max", o.x_max, "Grid end in um");
  app->add_option("--dt", o.dt, "Time step in us");
  app->add_option("--hold", o.hold, "Averaging window after the pulse in us");
  app->add_option("--depth", o.depth, "Trap depth in mK (negative)");
  app->add_option("--distance", o.distance, "Transport distance in um");
  app->add_option("--n-states", o.n_states, "Thermal state cutoff N_s");
  app->add_option("--runs", o.runs, "Noise realizations");
  app->add_option("--max-evals", o.max_evals, "Optimizer evaluation budget");
  app->add_option("--superiterations", o.superiterations, "Optimizer superiterations");
  app->add_option("--t-p-grid", o.t_p_grid, "Explicit t_p grid in us (comma separated)")->delimiter(',');
  app->add_option("--distances", o.distances, "Transport distances in um (comma separated)")->delimiter(',');
  app->add_option("--transports", o.transports, "Odd transport counts N_t (comma separated)")->delimiter(',');
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.t_p) c.pulse.t_p_us = *o.t_p;
  if (o.out) c.output_dir = *o.out;
  if (o.workers) c.workers = *o.workers;
  if (!o.temperatures.empty()) c.physics.temperatures_uk = o.temperatures;
  if (o.kind) c.pulse.kind = *o.kind;
  if (o.pulse_file) c.pulse.file = *o.pulse_file;
  if (o.n_points) c.numerics.n_points = *o.n_points;
  if (o.x_min) c.numerics.x_min_um = *o.x_min;
  if (o.x_max) c.numerics.x_max_um = *o.x_max;
  if (o.dt) c.numerics.dt_us = *o.dt;
  if (o.hold) c.numerics.hold_us = *o.hold;
  if (o.depth) c.physics.depth_mk = *o.depth;
  if (o.distance) c.physics.distance_um = *o.distance;
  if (o.n_states) c.physics.n_states = *o.n_states;
  if (o.runs) c.experiment.noise_runs = *o.runs;
  if (o.max_evals) c.optimizer.max_evaluations = *o.max_evals;
  if (o.superiterations) c.optimizer.superiterations = *o.superiterations;
  if (o.property) c.experiment.convergence = *o.property;
  if (!o.t_p_grid.empty()) c.pulse.t_p_grid_us = o.t_p_grid;
  if (!o.distances.empty()) c.experiment.distances_um = o.distances;
  if (!o.transports.empty()) c.experiment.transports = o.transports;
  return c;
}

std::ofstream open_output(const RunConfig& c, const std::string& name) {
  std::ofstream f(fs::path(c.output_dir) / name);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(c.output_dir) / name).string());
  return f;
}

Pulse load_pulse(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pulse file '" + path + "'");
  return read_pulse_csv(in);
}

Pulse selected_pulse(const RunConfig& c, const TransportProblem& problem) {
  return c.pulse.file.empty() ? problem.guess(c.pulse.t_p_us) : load_pulse(c.pulse.file);
}

void save_pulse(const RunConfig& c, const std::string& name, const Pulse& pulse) {
  auto f = open_output(c, name);
  write_pulse_csv(f, pulse, c.numerics.dt_us);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Objective averaged over a fixed set of noise realizations (or noiseless).
PulseObjective make_objective(const RunConfig& c, const TransportProblem& problem, int under_noise,
                              std::vector<NoiseRealization>& storage, double t_p) {
  if (under_noise <= 0) return [&problem](const Pulse& p) { return problem.fom(p); };
  const int steps = transport_steps(problem.guess(t_p), problem.settings());
  for (int r = 0; r < under_noise; ++r)
    storage.push_back(sample_realization(c.noise_spec(), c.numerics.dt_us, steps, static_cast<std::uint64_t>(r)));
  return [&problem, &storage](const Pulse& p) {
    double sum = 0.0;
    for (const auto& n : storage) sum += problem.fom(p, &n);
    return sum / static_cast<double>(storage.size());
  };
}

json run_spectrum(const RunConfig& c) {
  const double t = c.physics.temperatures_uk.front();
  const auto grid = c.grid().make();
  const auto spec = solve_spectrum(c.trap(), grid, c.physics.n_states, {}, c.units());
  const auto weights = boltzmann_weights(spec.energies, t, c.physics.n_states);
  auto f = open_output(c, "results.csv");
  f << "index,energy_rad_per_us,energy_uk,weight\n" << std::setprecision(12);
  for (std::size_t i = 0; i < spec.energies.size(); ++i)
    f << i << ',' << spec.energies[i] << ',' << UnitSystem::energy_to_microkelvin(spec.energies[i]) << ','
      << weights[i] << '\n';
  json s;
  s["temperature_uk"] = t;
  s["harmonic_frequency_rad_per_us"] = harmonic_frequency(c.trap(), c.units());
  s["wkb_bound_states"] = wkb_bound_states(c.trap(), c.units());
  if (spec.energies.size() >= 2) {
    const double gap = spec.energies[1] - spec.energies[0];
    s["gap_rad_per_us"] = gap;
    s["two_tau_us"] = 4.0 * constants::pi / gap;
    std::cout << "E1 - E0 = " << gap << " rad/us, 2 tau = " << 4.0 * constants::pi / gap << " us\n";
  }
  return s;
}

json run_transport(const RunConfig& c, const Extras& x) {
  const auto problem = prepare_transport(c.scenario(c.physics.temperatures_uk.front()));
  const Pulse pulse = selected_pulse(c, problem);
  const auto rec = problem.evaluate(pulse);
  {
    auto f = open_output(c, "results.csv");
    write_fom_csv(f, rec);
  }
  save_pulse(c, "pulse_transport.csv", pulse);
  if (x.trajectories) {
    auto plan = EvolutionPlan::from_pulse(c.trap(), pulse, c.numerics.dt_us, pulse.duration() + c.numerics.hold_us);
    plan.record_observables = true;
    const auto ens = evolve_ensemble(problem.initial.states, plan, problem.scenario.workers, {}, c.units());
    for (std::size_t i = 0; i < ens.trajectories.size(); ++i) {
      auto f = open_output(c, "trajectory_" + std::to_string(i) + ".csv");
      write_trajectory_csv(f, ens.trajectories[i]);
    }
  }
  std::cout << "J_avg = " << std::setprecision(6) << rec.average << "\n";
  if (rec.lost) std::cout << "ensemble reached the grid edges (P = " << rec.edge_probability << "): counted as lost\n";
  return {{"t_p_us", pulse.duration()}, {"j_avg", rec.average}, {"edge_probability", rec.edge_probability},
          {"lost", rec.lost}, {"pulse_source", c.pulse.file.empty() ? "pq" : c.pulse.file}};
}

json run_scan(const RunConfig& c, const Extras& x) {
  ScanOptions o;
  o.kind = pulse_kind_from_string(c.pulse.kind);
  o.optimizer = c.optimizer_config();
  o.threshold = c.experiment.threshold;
  o.workers = resolve_workers(c.workers);
  const auto grid = c.t_p_grid();
  const auto scan = scan_time_vs_fom(c.scenario(c.physics.temperatures_uk.front()), c.physics.temperatures_uk, grid, o);
  {
    auto f = open_output(c, "results.csv");
    write_scan_csv(f, scan);
  }
  json per_t = json::array();
  for (double t : c.physics.temperatures_uk) {
    std::vector<ScanPoint> pts;
    for (const auto& p : scan.points)
      if (p.temperature_uk == t) pts.push_back(p);
    const auto t_min = extract_t_min(pts, c.experiment.threshold);
    const auto minima = local_minima(pts);
    double spacing = NAN;
    if (minima.size() >= 2) spacing = (minima.back() - minima.front()) / static_cast<double>(minima.size() - 1);
    per_t.push_back({{"temperature_uk", t},
                     {"t_min_us", optional_number(t_min)},
                     {"local_minima_us", minima},
                     {"mean_minimum_spacing_us", std::isfinite(spacing) ? json(spacing) : json(nullptr)}});
    std::cout << "T = " << t << " uK: t_min = " << (t_min ? std::to_string(*t_min) : "none") << " us\n";
    if (x.write_pulses && o.kind == PulseKind::Optimal)
      for (const auto& p : pts)
        if (p.pulse) {
          std::ostringstream name;
          name << "pulse_T" << t << "_tp" << p.t_p_us << ".csv";
          save_pulse(c, name.str(), *p.pulse);
        }
  }
  return {{"kind", c.pulse.kind}, {"threshold", c.experiment.threshold}, {"temperatures", per_t}};
}

json run_optimize(const RunConfig& c, const Extras& x) {
  const auto problem = prepare_transport(c.scenario(c.physics.temperatures_uk.front()));
  const Pulse guess = selected_pulse(c, problem);
  std::vector<NoiseRealization> noise;
  const auto objective = make_objective(c, problem, x.under_noise, noise, guess.duration());
  const auto rec = optimize(guess, objective, c.optimizer_config());
  {
    auto f = open_output(c, "results.csv");
    write_evaluations_csv(f, rec);
  }
  {
    auto f = open_output(c, "superiterations.csv");
    write_superiterations_csv(f, rec);
  }
  save_pulse(c, "pulse_guess.csv", guess);
  save_pulse(c, "pulse_oc.csv", rec.best);
  const double gain = (rec.initial_fom - rec.best_fom) / rec.initial_fom;
  std::cout << "J_avg guess = " << rec.initial_fom << ", optimized = " << rec.best_fom << " (improvement "
            << 100.0 * gain << "%)\n";
  return {{"t_p_us", guess.duration()},
          {"initial_fom", rec.initial_fom},
          {"best_fom", rec.best_fom},
          {"improvement", gain},
          {"evaluations", rec.evaluations.size()},
          {"superiterations", rec.superiteration_best.size()},
          {"stop_reason", rec.stop_reason},
          {"noise_realizations", x.under_noise}};
}

json run_noise(const RunConfig& c) {
  const auto problem = prepare_transport(c.scenario(c.physics.temperatures_uk.front()));
  const Pulse pulse = selected_pulse(c, problem);
  const auto res = noise_ensemble(problem, pulse, c.experiment.noise_runs, c.noise_spec());
  {
    auto f = open_output(c, "results.csv");
    write_noise_ensemble_csv(f, res);
  }
  std::cout << "J_avg = " << res.mean << " +- " << res.stddev << " (noiseless " << res.noiseless << ")\n";
  return {{"t_p_us", pulse.duration()}, {"runs", res.j_avg.size()}, {"mean", res.mean},
          {"stddev", res.stddev},       {"noiseless", res.noiseless}};
}

json run_recapture(const RunConfig& c, const Extras& x) {
  const auto problem = prepare_transport(c.scenario(c.physics.temperatures_uk.front()));
  const Pulse pq = problem.guess(c.pulse.t_p_us);
  auto optimized = [&](std::uint64_t seed) {
    DcrabConfig o = c.optimizer_config();
    o.seed = seed;
    return optimize(pq, [&](const Pulse& p) { return problem.fom(p); }, o).best;
  };
  const Pulse oc = c.pulse.file.empty() ? optimized(c.seed) : load_pulse(c.pulse.file);
  std::optional<Pulse> rerun;
  if (!x.no_floor) rerun = optimized(c.seed + 1);
  RecaptureOptions ro;
  ro.transports = c.experiment.transports;
  ro.tau_us = c.experiment.tau_us;
  ro.central_fraction = c.experiment.recapture_fraction;
  ro.floor_factor = c.experiment.floor_factor;
  const auto sweep = recapture_sweep(problem, pq, oc, rerun ? &*rerun : nullptr, ro);
  {
    auto f = open_output(c, "results.csv");
    write_recapture_sweep_csv(f, sweep);
  }
  save_pulse(c, "pulse_pq.csv", pq);
  save_pulse(c, "pulse_oc.csv", oc);
  if (rerun) save_pulse(c, "pulse_oc_rerun.csv", *rerun);
  json rows = json::array();
  for (const auto& cmp : sweep.comparisons) {
    rows.push_back({{"n_transports", cmp.transports},
                    {"metric", cmp.metric},
                    {"above_floor", rerun ? json(cmp.metric > sweep.floor) : json(nullptr)}});
    std::cout << "N_t = " << cmp.transports << ": max |P_pq - P_oc| = " << cmp.metric << "\n";
  }
  if (rerun) std::cout << "floor = " << sweep.floor << "\n";
  return {{"t_p_us", c.pulse.t_p_us}, {"floor", rerun ? json(sweep.floor) : json(nullptr)}, {"comparisons", rows}};
}

json run_distance(const RunConfig& c) {
  ScanOptions o;
  o.kind = pulse_kind_from_string(c.pulse.kind);
  o.optimizer = c.optimizer_config();
  o.threshold = c.experiment.threshold;
  o.workers = resolve_workers(c.workers);
  const auto grid = c.t_p_grid();
  const auto scan = qsl_vs_distance(c.scenario(c.physics.temperatures_uk.front()), c.experiment.distances_um, grid, o);
  {
    auto f = open_output(c, "results.csv");
    write_distance_csv(f, scan);
  }
  json pts = json::array();
  for (const auto& p : scan.points) {
    pts.push_back({{"distance_um", p.distance_um}, {"t_min_us", optional_number(p.t_min_us)}, {"evaluations", p.evaluations}});
    std::cout << "d = " << p.distance_um << " um: t_min = " << (p.t_min_us ? std::to_string(*p.t_min_us) : "none")
              << " us\n";
  }
  return {{"kind", c.pulse.kind},
          {"points", pts},
          {"fit", {{"slope_us_per_um", scan.fit.slope}, {"intercept_us", scan.fit.intercept}, {"r_squared", scan.fit.r_squared}}}};
}

json run_converge(const RunConfig& c) {
  std::vector<ConvergenceProperty> props;
  if (c.experiment.convergence == "all")
    props = {ConvergenceProperty::TimeStep, ConvergenceProperty::GridSpacing, ConvergenceProperty::Extent,
             ConvergenceProperty::StateCutoff};
  else
    props = {convergence_property_from_string(c.experiment.convergence)};
  auto f = open_output(c, "results.csv");
  f << "property,factor,parameter,infidelity\n";
  json out = json::array();
  for (auto p : props) {
    const auto res = convergence_study(p, c.convergence_config());
    std::ostringstream rows;
    write_convergence_csv(rows, res);
    const std::string text = rows.str();
    f << text.substr(text.find('\n') + 1);
    out.push_back({{"property", to_string(p)},
                   {"slope", std::isfinite(res.slope) ? json(res.slope) : json(nullptr)},
                   {"monotone", res.monotone}});
    std::cout << to_string(p) << ": slope " << res.slope << (res.monotone ? ", monotone" : ", not monotone") << "\n";
  }
  return {{"studies", out}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical-tweezer atom transport: split-operator simulation and dCRAB optimal control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TWEEZER_VERSION);
  Overrides o;
  Extras x;

  auto* spectrum = app.add_subcommand("spectrum", "Bound states and Boltzmann weights of the trap");
  auto* transport = app.add_subcommand("transport", "J_avg of one pulse");
  auto* scan = app.add_subcommand("scan-time", "J_avg against pulse duration");
  auto* opt = app.add_subcommand("optimize", "dCRAB optimization of one pulse");
  auto* noise = app.add_subcommand("noise-ensemble", "J_avg statistics under laser noise");
  auto* recap = app.add_subcommand("recapture", "Release-and-capture curves for pq and optimized pulses");
  auto* dist = app.add_subcommand("qsl-distance", "Speed limit against transport distance");
  auto* conv = app.add_subcommand("converge", "Convergence study");
  auto* check = app.add_subcommand("validate", "Check a configuration without running");
  for (auto* s : {spectrum, transport, scan, opt, noise, recap, dist, conv, check}) add_common(s, o);
  transport->add_flag("--trajectories", x.trajectories, "Write trajectory_<i>.csv per ensemble member");
  scan->add_flag("--write-pulses", x.write_pulses, "Write optimized pulses per point");
  opt->add_option("--under-noise", x.under_noise, "Average the objective over this many fixed noise realizations");
  recap->add_flag("--no-floor", x.no_floor, "Skip the second optimization that defines the floor");
  conv->add_option("--property", o.property, "dt, dx, extent, n_states or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig config = resolve(o);
    const auto report = validate(config, scan->parsed() || dist->parsed());
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    if (!report.ok()) {
      for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
      return 2;
    }
    if (check->parsed()) {
      std::cout << "configuration ok\n";
      return 0;
    }

    fs::create_directories(config.output_dir);
    const auto started = std::chrono::steady_clock::now();
    json summary;
    std::string command;
    if (spectrum->parsed()) command = "spectrum", summary = run_spectrum(config);
    else if (transport->parsed()) command = "transport", summary = run_transport(config, x);
    else if (scan->parsed()) command = "scan-time", summary = run_scan(config, x);
    else if (opt->parsed()) command = "optimize", summary = run_optimize(config, x);
    else if (noise->parsed()) command = "noise-ensemble", summary = run_noise(config);
    else if (recap->parsed()) command = "recapture", summary = run_recapture(config, x);
    else if (dist->parsed()) command = "qsl-distance", summary = run_distance(config);
    else command = "converge", summary = run_converge(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["command"] = command;
    meta["version"] = TWEEZER_VERSION;
    meta["seed"] = config.seed;
    meta["wall_time_s"] = wall;
    meta["warnings"] = report.warnings;
    meta["summary"] = summary;
    meta["config"] = json::parse(config_to_json(config));
    auto f = open_output(config, "meta.json");
    f << meta.dump(2) << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
