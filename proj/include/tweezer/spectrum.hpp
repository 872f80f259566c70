#pragma once

#include "tweezer/grid.hpp"
#include "tweezer/trap.hpp"
#include "tweezer/units.hpp"

#include <vector>

namespace tweezer {

struct TrapSpectrum {
  std::vector<double> energies;      // rad/us, ascending
  std::vector<WaveFunction> states;  // orthonormal, real, largest amplitude positive
  /// Set when fewer bound states exist than were requested.
  bool truncated = false;
  int requested = 0;
};

struct SpectrumOptions {
  /// Half-width of the diagonalization window around the trap center in um.
  /// Zero selects 2 w0.
  double window_halfwidth_um = 0.0;
};

/// Lowest n_states bound eigenpairs of K + V with a Fourier (spectral) kinetic term,
/// from a dense diagonalization on a window around the trap, embedded in the full grid.
TrapSpectrum solve_spectrum(const TrapParams& params, const GridPtr& grid, int n_states,
                            const SpectrumOptions& options = {}, const UnitSystem& units = {});

/// Apply H = K + V on the full grid (spectral kinetic energy).
Eigen::VectorXcd apply_hamiltonian(const TrapParams& params, const WaveFunction& psi,
                                   const UnitSystem& units = {});

/// Mixed state sum_i p_i |psi_i><psi_i| over the lowest N_s trap states.
struct ThermalEnsemble {
  std::vector<double> weights;       // normalized, nonincreasing
  std::vector<WaveFunction> states;
  std::vector<double> energies;
  double temperature_uk = 0.0;

  [[nodiscard]] int cutoff() const { return static_cast<int>(weights.size()); }
};

/// Boltzmann weights exp(-E_i / k_B T) over the N_s lowest states, renormalized.
ThermalEnsemble thermal_ensemble(const TrapSpectrum& spectrum, double temperature_uk, int n_states);

/// Boltzmann weights alone (same normalization), for cutoff studies.
std::vector<double> boltzmann_weights(const std::vector<double>& energies, double temperature_uk,
                                      int n_states);

/// (sum_{i < |p|} sqrt(p_i q_i))^2 where q is the same spectrum at a larger cutoff.
double cutoff_fidelity(const std::vector<double>& p, const std::vector<double>& q);

/// Every member translated by shift_um (Fourier shift theorem); weights unchanged.
/// Throws ConfigError if any amplitude above 1e-6 of the peak would leave the grid.
ThermalEnsemble shifted_ensemble(const ThermalEnsemble& ensemble, double shift_um);
WaveFunction shifted_state(const WaveFunction& psi, double shift_um);

}  // namespace tweezer
