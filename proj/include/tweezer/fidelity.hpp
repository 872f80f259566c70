#pragma once

#include "tweezer/noise.hpp"
#include "tweezer/propagator.hpp"
#include "tweezer/pulse.hpp"
#include "tweezer/spectrum.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace tweezer {

/// Uhlmann infidelity 1 - (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between
/// rho = sum p_i |a_i><a_i| and sigma = sum q_j |b_j><b_j| with orthonormal members.
/// Evaluated in the rank-N subspace: with O_ij = <a_i|b_j> and
/// M = D_p^1/2 O D_q O^dagger D_p^1/2, the fidelity is (sum_k sqrt(lambda_k(M)))^2,
/// evaluated as the squared sum of singular values of D_p^1/2 O D_q^1/2.
double uhlmann_infidelity(std::span<const double> p, std::span<const WaveFunction> a,
                          std::span<const double> q, std::span<const WaveFunction> b);
/// Same, from a precomputed overlap matrix O_ij = <a_i|b_j>.
double uhlmann_infidelity_from_overlaps(std::span<const double> p, std::span<const double> q,
                                        const Eigen::MatrixXcd& overlaps);

struct TransportSettings {
  double dt = 0.1;           // us
  double hold_us = 10.0;     // averaging window after the pulse
  int workers = 1;
  const NoiseRealization* noise = nullptr;  // nodes must cover t_p + hold
  UnitSystem units;
};

/// Weighted peak probability within one waist of either grid edge above which the
/// atom counts as lost. The grid is periodic, so density there can wrap around.
inline constexpr double kEdgeLossLimit = 1e-3;

struct FomRecord {
  std::vector<double> times_us;  // window nodes t_p .. t_p + hold, both included
  std::vector<double> infidelity;
  double average = 0.0;
  double hold_us = 0.0;
  /// sum_i p_i max_t P_i(edge bands) over the whole evolution.
  double edge_probability = 0.0;
  bool lost = false;
  std::vector<WaveFunction> final_states;
};

/// Moves the trap along the pulse, holds it at r_f for the averaging window and
/// records J against `target` at every node of that window. J_avg is their mean,
/// or 1 when the ensemble reached the grid edges (lost).
FomRecord time_averaged_fom(const ThermalEnsemble& initial, const ThermalEnsemble& target,
                            const TrapParams& trap, const Pulse& pulse, const TransportSettings& settings);

/// Number of noise nodes the settings require for this pulse.
int transport_steps(const Pulse& pulse, const TransportSettings& settings);

/// Default 35th-65th percentile band of the trap profile.
inline constexpr double kRecaptureCentralFraction = 0.30;

/// Trap off for tau_rc, then the population within the central band of the trap
/// profile around center_um, weighted over the ensemble.
double recapture_probability(std::span<const double> weights, std::span<const WaveFunction> states,
                             double waist_um, double center_um, double tau_rc_us,
                             double central_fraction = kRecaptureCentralFraction, const UnitSystem& units = {});

struct RecaptureCurve {
  int transports = 1;
  std::vector<double> tau_us;
  std::vector<double> probability;
};
RecaptureCurve recapture_curve(std::span<const double> weights, std::span<const WaveFunction> states,
                               double waist_um, double center_um, std::span<const double> tau_grid_us,
                               int transports, double central_fraction = kRecaptureCentralFraction,
                               const UnitSystem& units = {});

/// Runs the pulse forward, then reversed, alternately, n_transports times (odd, so the
/// atom ends at r_f). Returns the final states; weights are unchanged.
std::vector<WaveFunction> multi_transport(std::span<const WaveFunction> states, const TrapParams& trap,
                                          const Pulse& pulse, int n_transports, double dt, int workers = 1,
                                          const UnitSystem& units = {});

void write_fom_csv(std::ostream& out, const FomRecord& record);
void write_recapture_csv(std::ostream& out, std::span<const RecaptureCurve> curves,
                         std::span<const std::string> labels);

}  // namespace tweezer
