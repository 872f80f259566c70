#pragma once

#include "tweezer/dcrab.hpp"
#include "tweezer/experiments.hpp"
#include "tweezer/noise.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tweezer {

/// Every input of a run, in external units (um, us, mK, uK, MHz). Defaults are the
/// production settings: Sr-88, U0 = -1 mK, w0 = 0.5 um, d = 3 um, dx = 0.002 um over
/// 10 um, dt = 0.1 us, N_s = 8, 5000 evaluations and 30 superiterations.
struct RunConfig {
  struct Physics {
    double mass_kg = constants::strontium88_mass;
    double depth_mk = -1.0;
    double waist_um = 0.5;
    double start_um = 0.0;
    double distance_um = 3.0;
    std::vector<double> temperatures_uk{1.0};
    int n_states = 8;
  } physics;

  struct Numerics {
    double dt_us = 0.1;
    double x_min_um = -5.0;
    double x_max_um = 5.0;
    int n_points = 5000;
    double hold_us = 10.0;
  } numerics;

  struct PulseSettings {
    std::string kind = "pq";  // pq | oc
    double t_p_us = 20.0;
    std::vector<double> t_p_grid_us;  // empty selects 1, 2, ..., 40
    std::string file;                 // optional pulse CSV for transport / noise-ensemble / recapture
  } pulse;

  DcrabConfig optimizer;
  NoiseSpec noise;

  struct Experiment {
    double threshold = 1e-2;
    int noise_runs = 100;
    std::vector<int> transports{1, 21, 41};
    std::vector<double> tau_us;  // empty selects 0, 2, ..., 40
    double recapture_fraction = 0.30;
    double floor_factor = 3.0;
    std::vector<double> distances_um{1, 2, 3, 4, 5, 6, 7, 8};
    std::string convergence = "all";  // dt | dx | extent | n_states | all
    ConvergenceOptions convergence_options;
  } experiment;

  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int workers = 0;  // 0: all cores

  [[nodiscard]] std::vector<double> t_p_grid() const;
  [[nodiscard]] UnitSystem units() const { return {physics.mass_kg}; }
  [[nodiscard]] TrapParams trap() const;
  [[nodiscard]] GridSpec grid() const { return {numerics.x_min_um, numerics.x_max_um, numerics.n_points}; }
  /// Scenario at one temperature with all workers on the ensemble members.
  [[nodiscard]] Scenario scenario(double temperature_uk) const;
  /// Optimizer settings with the run seed applied.
  [[nodiscard]] DcrabConfig optimizer_config() const;
  /// Noise settings with the run seed applied.
  [[nodiscard]] NoiseSpec noise_spec() const;
  [[nodiscard]] ConvergenceOptions convergence_config() const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  [[nodiscard]] bool ok() const { return errors.empty(); }
};

/// Physical and numerical consistency: grid resolves the trap (w0 >= 10 dx), both trap
/// positions fit in the grid with a 2 w0 margin, N_s within the WKB bound-state count.
/// An under-resolved transport momentum is a warning; with uses_t_p_grid the shortest
/// duration of the t_p grid is checked instead of pulse.t_p_us.
ValidationReport validate(const RunConfig& config, bool uses_t_p_grid = false);

/// Semiclassical bound-state count of the Gaussian well, sqrt(2 m |U0| / hbar^2) w0 / sqrt(pi) + 1/2.
double wkb_bound_states(const TrapParams& trap, const UnitSystem& units = {});

/// Parses JSON text over the defaults. Unknown keys and type mismatches throw ConfigError
/// naming the key.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

/// Fully resolved configuration as JSON.
std::string config_to_json(const RunConfig& config, int indent = 2);

}  // namespace tweezer
