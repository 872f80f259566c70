#include "tweezer/config.hpp"

#include "tweezer/error.hpp"
#include "tweezer/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tweezer {
namespace {

using json = nlohmann::ordered_json;

// Reads known keys of one JSON object and rejects everything else.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(name() + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + " has the wrong type (" + node_.at(key).dump() + ")");
    }
  }

  template <class F>
  void read_string(const char* key, F&& convert) {
    std::string s;
    if (!node_.contains(key)) {
      seen_.insert(key);
      return;
    }
    read(key, s);
    convert(s);
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return {node_.contains(key) ? node_.at(key) : empty, name(key)};
  }

  [[nodiscard]] std::string name(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + name(item.key()) + "'");
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string basis_name(BasisElement::Kind k) { return k == BasisElement::Kind::Fourier ? "fourier" : "sinc"; }
std::string center_name(SincCenter c) { return c == SincCenter::Midpoint ? "midpoint" : "random"; }
std::string constraint_name(PulseConstraint c) { return c == PulseConstraint::None ? "none" : "pq10"; }

void read_optimizer(Section s, DcrabConfig& o) {
  s.read("superiterations", o.superiterations);
  s.read("max_evaluations", o.max_evaluations);
  s.read("max_evaluations_per_superiteration", o.max_evaluations_per_superiteration);
  s.read("coefficients", o.coefficients);
  s.read_string("basis", [&](const std::string& v) {
    if (v == "sinc") o.basis = BasisElement::Kind::Sinc;
    else if (v == "fourier") o.basis = BasisElement::Kind::Fourier;
    else throw ConfigError(s.name("basis") + " must be 'sinc' or 'fourier'");
  });
  s.read_string("sinc_center", [&](const std::string& v) {
    if (v == "midpoint") o.sinc_center = SincCenter::Midpoint;
    else if (v == "random") o.sinc_center = SincCenter::Random;
    else throw ConfigError(s.name("sinc_center") + " must be 'midpoint' or 'random'");
  });
  s.read("max_frequency_mhz", o.max_frequency_mhz);
  s.read("simplex_step_scale", o.simplex_step_scale);
  s.read("simplex_step_coefficient", o.simplex_step_coefficient);
  s.read("stall_relative", o.stall_relative);
  s.read("stall_window", o.stall_window);
  s.read("stall_superiterations", o.stall_superiterations);
  s.read("target_fom", o.target_fom);
  s.read_string("constraint", [&](const std::string& v) {
    if (v == "none") o.constraint = PulseConstraint::None;
    else if (v == "pq10") o.constraint = PulseConstraint::PiecewiseQuadratic10us;
    else throw ConfigError(s.name("constraint") + " must be 'none' or 'pq10'");
  });
  s.read("constraint_sample_dt", o.constraint_sample_dt);
  s.finish();
}

void read_noise(Section s, NoiseSpec& n) {
  s.read("rin_amplitude", n.rin_amplitude);
  s.read("depth_low_amplitude", n.depth_low_amplitude);
  s.read("depth_low_max_mhz", n.depth_low_max_mhz);
  s.read("depth_high_amplitude", n.depth_high_amplitude);
  s.read("depth_high_min_mhz", n.depth_high_min_mhz);
  s.read("depth_high_max_mhz", n.depth_high_max_mhz);
  s.read("waist_amplitude", n.waist_amplitude);
  s.read("waist_period_us", n.waist_period_us);
  s.read("position_amplitude_um", n.position_amplitude_um);
  s.read("position_min_mhz", n.position_min_mhz);
  s.read("position_max_mhz", n.position_max_mhz);
  s.read("depth_factor_floor", n.depth_factor_floor);
  s.finish();
}

void read_convergence(Section s, ConvergenceOptions& c) {
  s.read("base_dt_us", c.base_dt_us);
  s.read("base_dx_um", c.base_dx_um);
  s.read("base_extent_um", c.base_extent_um);
  s.read("base_states", c.base_states);
  s.read("factors", c.factors);
  s.read("reference_factor", c.reference_factor);
  s.read("t_p_us", c.t_p_us);
  s.read("release_us", c.release_us);
  s.read("recapture_us", c.recapture_us);
  s.read("temperature_uk", c.temperature_uk);
  s.finish();
}

json optimizer_json(const DcrabConfig& o) {
  return {{"superiterations", o.superiterations},
          {"max_evaluations", o.max_evaluations},
          {"max_evaluations_per_superiteration", o.max_evaluations_per_superiteration},
          {"coefficients", o.coefficients},
          {"basis", basis_name(o.basis)},
          {"sinc_center", center_name(o.sinc_center)},
          {"max_frequency_mhz", o.max_frequency_mhz},
          {"simplex_step_scale", o.simplex_step_scale},
          {"simplex_step_coefficient", o.simplex_step_coefficient},
          {"stall_relative", o.stall_relative},
          {"stall_window", o.stall_window},
          {"stall_superiterations", o.stall_superiterations},
          {"target_fom", o.target_fom},
          {"constraint", constraint_name(o.constraint)},
          {"constraint_sample_dt", o.constraint_sample_dt}};
}

json noise_json(const NoiseSpec& n) {
  return {{"rin_amplitude", n.rin_amplitude},
          {"depth_low_amplitude", n.depth_low_amplitude},
          {"depth_low_max_mhz", n.depth_low_max_mhz},
          {"depth_high_amplitude", n.depth_high_amplitude},
          {"depth_high_min_mhz", n.depth_high_min_mhz},
          {"depth_high_max_mhz", n.depth_high_max_mhz},
          {"waist_amplitude", n.waist_amplitude},
          {"waist_period_us", n.waist_period_us},
          {"position_amplitude_um", n.position_amplitude_um},
          {"position_min_mhz", n.position_min_mhz},
          {"position_max_mhz", n.position_max_mhz},
          {"depth_factor_floor", n.depth_factor_floor}};
}

bool finite_all(std::initializer_list<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

std::vector<double> RunConfig::t_p_grid() const {
  if (!pulse.t_p_grid_us.empty()) return pulse.t_p_grid_us;
  std::vector<double> g;
  for (int t = 1; t <= 40; ++t) g.push_back(t);
  return g;
}

TrapParams RunConfig::trap() const {
  TrapParams t;
  t.depth_mk = physics.depth_mk;
  t.waist_um = physics.waist_um;
  t.center_um = physics.start_um;
  return t;
}

Scenario RunConfig::scenario(double temperature_uk) const {
  Scenario s;
  s.units = units();
  s.trap = trap();
  s.distance_um = physics.distance_um;
  s.temperature_uk = temperature_uk;
  s.n_states = physics.n_states;
  s.grid = grid();
  s.dt_us = numerics.dt_us;
  s.hold_us = numerics.hold_us;
  s.workers = resolve_workers(workers);
  return s;
}

DcrabConfig RunConfig::optimizer_config() const {
  DcrabConfig c = optimizer;
  c.seed = seed;
  return c;
}

NoiseSpec RunConfig::noise_spec() const {
  NoiseSpec n = noise;
  n.seed = seed;
  return n;
}

ConvergenceOptions RunConfig::convergence_config() const {
  ConvergenceOptions c = experiment.convergence_options;
  c.units = units();
  c.trap = trap();
  c.distance_um = physics.distance_um;
  return c;
}

double wkb_bound_states(const TrapParams& trap, const UnitSystem& units) {
  const double depth = std::abs(trap.depth_internal(units));
  return std::sqrt(2.0 * units.mass_over_hbar() * depth) * trap.waist_um / std::sqrt(constants::pi) + 0.5;
}

ValidationReport validate(const RunConfig& c, bool uses_t_p_grid) {
  ValidationReport r;
  auto error = [&](std::string m) { r.errors.push_back(std::move(m)); };
  auto warn = [&](std::string m) { r.warnings.push_back(std::move(m)); };
  const auto& p = c.physics;
  const auto& n = c.numerics;

  if (!finite_all({p.mass_kg, p.depth_mk, p.waist_um, p.start_um, p.distance_um, n.dt_us, n.x_min_um, n.x_max_um,
                   n.hold_us, c.pulse.t_p_us}))
    error("physical and numerical values must be finite");
  if (!(p.mass_kg > 0.0)) error("physics.mass_kg must be positive");
  if (!(p.depth_mk < 0.0)) error("physics.depth_mk must be negative (attractive trap)");
  if (!(p.waist_um > 0.0)) error("physics.waist_um must be positive");
  if (!(p.distance_um >= 0.0)) error("physics.distance_um must be non-negative");
  if (p.temperatures_uk.empty()) error("physics.temperatures_uk must not be empty");
  for (double t : p.temperatures_uk)
    if (!(t > 0.0) || !std::isfinite(t)) error("physics.temperatures_uk entries must be positive");
  if (p.n_states < 1) error("physics.n_states must be at least 1");
  if (!(n.dt_us > 0.0)) error("numerics.dt_us must be positive");
  if (!(n.hold_us >= 0.0)) error("numerics.hold_us must be non-negative");
  if (n.n_points < 16 || n.n_points % 2 != 0) error("numerics.n_points must be even and at least 16");
  if (!(n.x_max_um > n.x_min_um)) error("numerics.x_max_um must exceed numerics.x_min_um");
  if (!(c.pulse.t_p_us > 0.0)) error("pulse.t_p_us must be positive");
  if (c.pulse.kind != "pq" && c.pulse.kind != "oc") error("pulse.kind must be 'pq' or 'oc'");
  for (double t : c.t_p_grid())
    if (!(t > 0.0)) error("pulse.t_p_grid_us entries must be positive");
  if (c.experiment.noise_runs < 1) error("experiment.noise_runs must be at least 1");
  for (int nt : c.experiment.transports)
    if (nt < 1 || nt % 2 == 0) error("experiment.transports entries must be odd and positive");
  if (!(c.experiment.recapture_fraction > 0.0 && c.experiment.recapture_fraction < 1.0))
    error("experiment.recapture_fraction must lie in (0, 1)");
  if (!(c.experiment.threshold > 0.0)) error("experiment.threshold must be positive");
  try {
    c.optimizer.validate();
  } catch (const ConfigError& e) {
    error(e.what());
  }
  try {
    c.noise.validate();
  } catch (const ConfigError& e) {
    error(e.what());
  }
  if (!r.ok()) return r;

  const double dx = (n.x_max_um - n.x_min_um) / n.n_points;
  if (p.waist_um < 10.0 * dx)
    error("grid does not resolve the trap: waist " + std::to_string(p.waist_um) + " um < 10 dx = " +
          std::to_string(10.0 * dx) + " um");
  const double margin = 2.0 * p.waist_um;
  if (p.start_um - margin < n.x_min_um || p.start_um + p.distance_um + margin > n.x_max_um)
    error("trap positions with a 2 w0 margin [" + std::to_string(p.start_um - margin) + ", " +
          std::to_string(p.start_um + p.distance_um + margin) + "] um do not fit in the grid");
  const double bound = std::floor(wkb_bound_states(c.trap(), c.units()));
  if (p.n_states > bound)
    error("physics.n_states = " + std::to_string(p.n_states) + " exceeds the ~" + std::to_string(int(bound)) +
          " bound states of the trap");

  // Peak momentum of the pq pulse at the shortest duration in use versus the grid cutoff.
  double t_short = c.pulse.t_p_us;
  if (uses_t_p_grid) {
    const auto grid = c.t_p_grid();
    t_short = *std::min_element(grid.begin(), grid.end());
  }
  const double k_peak = c.units().mass_over_hbar() * 2.0 * p.distance_um / t_short;
  const double k_max = constants::pi / dx;
  if (k_peak > 0.8 * k_max)
    warn("pq transport at t_p = " + std::to_string(t_short) + " us reaches k = " + std::to_string(k_peak) +
         " rad/um, close to the grid cutoff " + std::to_string(k_max) + " rad/um");
  if (n.dt_us > 0.5) warn("numerics.dt_us above 0.5 us is outside the converged range");
  return r;
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");
  {
    auto s = top.child("physics");
    s.read("mass_kg", c.physics.mass_kg);
    s.read("depth_mk", c.physics.depth_mk);
    s.read("waist_um", c.physics.waist_um);
    s.read("start_um", c.physics.start_um);
    s.read("distance_um", c.physics.distance_um);
    s.read("temperatures_uk", c.physics.temperatures_uk);
    s.read("n_states", c.physics.n_states);
    s.finish();
  }
  {
    auto s = top.child("numerics");
    s.read("dt_us", c.numerics.dt_us);
    s.read("x_min_um", c.numerics.x_min_um);
    s.read("x_max_um", c.numerics.x_max_um);
    s.read("n_points", c.numerics.n_points);
    s.read("hold_us", c.numerics.hold_us);
    s.finish();
  }
  {
    auto s = top.child("pulse");
    s.read("kind", c.pulse.kind);
    s.read("t_p_us", c.pulse.t_p_us);
    s.read("t_p_grid_us", c.pulse.t_p_grid_us);
    s.read("file", c.pulse.file);
    s.finish();
  }
  read_optimizer(top.child("optimizer"), c.optimizer);
  read_noise(top.child("noise"), c.noise);
  {
    auto s = top.child("experiment");
    s.read("threshold", c.experiment.threshold);
    s.read("noise_runs", c.experiment.noise_runs);
    s.read("transports", c.experiment.transports);
    s.read("tau_us", c.experiment.tau_us);
    s.read("recapture_fraction", c.experiment.recapture_fraction);
    s.read("floor_factor", c.experiment.floor_factor);
    s.read("distances_um", c.experiment.distances_um);
    s.read("convergence", c.experiment.convergence);
    read_convergence(s.child("convergence_options"), c.experiment.convergence_options);
    s.finish();
  }
  top.read("output_dir", c.output_dir);
  top.read("seed", c.seed);
  top.read("workers", c.workers);
  top.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const RunConfig& c, int indent) {
  const auto& cv = c.experiment.convergence_options;
  json j;
  j["physics"] = {{"mass_kg", c.physics.mass_kg},       {"depth_mk", c.physics.depth_mk},
                  {"waist_um", c.physics.waist_um},     {"start_um", c.physics.start_um},
                  {"distance_um", c.physics.distance_um}, {"temperatures_uk", c.physics.temperatures_uk},
                  {"n_states", c.physics.n_states}};
  j["numerics"] = {{"dt_us", c.numerics.dt_us},       {"x_min_um", c.numerics.x_min_um},
                   {"x_max_um", c.numerics.x_max_um}, {"n_points", c.numerics.n_points},
                   {"hold_us", c.numerics.hold_us}};
  j["pulse"] = {{"kind", c.pulse.kind},
                {"t_p_us", c.pulse.t_p_us},
                {"t_p_grid_us", c.t_p_grid()},
                {"file", c.pulse.file}};
  j["optimizer"] = optimizer_json(c.optimizer);
  j["noise"] = noise_json(c.noise);
  j["experiment"] = {{"threshold", c.experiment.threshold},
                     {"noise_runs", c.experiment.noise_runs},
                     {"transports", c.experiment.transports},
                     {"tau_us", c.experiment.tau_us},
                     {"recapture_fraction", c.experiment.recapture_fraction},
                     {"floor_factor", c.experiment.floor_factor},
                     {"distances_um", c.experiment.distances_um},
                     {"convergence", c.experiment.convergence},
                     {"convergence_options",
                      {{"base_dt_us", cv.base_dt_us},
                       {"base_dx_um", cv.base_dx_um},
                       {"base_extent_um", cv.base_extent_um},
                       {"base_states", cv.base_states},
                       {"factors", cv.factors},
                       {"reference_factor", cv.reference_factor},
                       {"t_p_us", cv.t_p_us},
                       {"release_us", cv.release_us},
                       {"recapture_us", cv.recapture_us},
                       {"temperature_uk", cv.temperature_uk}}}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j.dump(indent);
}

}  // namespace tweezer
