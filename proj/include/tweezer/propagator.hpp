#pragma once

#include "tweezer/grid.hpp"
#include "tweezer/noise.hpp"
#include "tweezer/pulse.hpp"
#include "tweezer/trap.hpp"
#include "tweezer/units.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tweezer {

/// Time grid plus the trap state at every node t_k = k dt, k = 0..n_steps.
/// The split step from t_k to t_{k+1} uses the mean of the two adjacent nodes,
/// i.e. the trap at the step midpoint.
struct EvolutionPlan {
  TrapParams trap;   // depth and waist before noise factors; center is unused
  double dt = 0.1;
  int n_steps = 0;
  std::vector<double> center_um;     // includes any position noise
  std::vector<double> depth_factor;  // 0 switches the trap off
  std::vector<double> waist_factor;
  bool record_observables = false;
  int snapshot_stride = 0;           // 0 disables |psi|^2 snapshots

  /// Trap following the pulse for t_total, holding still at r_f after t_p.
  static EvolutionPlan from_pulse(const TrapParams& trap, const Pulse& pulse, double dt, double t_total,
                                  const NoiseRealization* noise = nullptr);
  /// Static trap at trap.center_um.
  static EvolutionPlan static_trap(const TrapParams& trap, double dt, double t_total);
  /// Validates node counts and finiteness; throws ConfigError.
  void validate() const;
  /// Reverse node order: the same protocol run backwards in time.
  [[nodiscard]] EvolutionPlan time_reversed() const;
  [[nodiscard]] double duration() const { return dt * n_steps; }
};

struct Observables {
  double mean_x = 0.0;
  double mean_k = 0.0;
  double sigma_x = 0.0;
  double sigma_k = 0.0;
  double norm = 0.0;
};
Observables measure(const WaveFunction& psi);

struct Trajectory {
  double dt = 0.0;
  std::vector<Observables> nodes;           // one per node when recording
  std::vector<int> snapshot_nodes;
  std::vector<Eigen::VectorXd> snapshots;   // |psi(x)|^2
};

struct EvolutionResult {
  WaveFunction state;
  Trajectory trajectory;
};

/// Callback after every node (including node 0) for member `index` of an ensemble.
/// Must be safe to call concurrently for distinct indices.
using NodeObserver = std::function<void(int index, int node, const WaveFunction& psi)>;

/// Strang split-operator propagation: exp(-i V dt/2) exp(-i K dt) exp(-i V dt/2) per step,
/// kinetic factor applied in momentum space. Throws NumericalError on non-finite amplitudes.
EvolutionResult evolve(const WaveFunction& psi0, const EvolutionPlan& plan, const UnitSystem& units = {});

struct EnsembleEvolution {
  std::vector<WaveFunction> states;
  std::vector<Trajectory> trajectories;
};

/// Evolves every member independently under the same plan. Members are split into
/// `workers` groups; results do not depend on the worker count.
EnsembleEvolution evolve_ensemble(std::span<const WaveFunction> states, const EvolutionPlan& plan,
                                  int workers = 1, const NodeObserver& observer = {},
                                  const UnitSystem& units = {});

/// Exact free-particle evolution for duration_us (trap switched off).
WaveFunction free_evolve(const WaveFunction& psi, double duration_us, const UnitSystem& units = {});

/// CSV export of a trajectory: t_us,mean_x_um,mean_k_per_um,sigma_x_um,sigma_k_per_um,norm.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace tweezer
