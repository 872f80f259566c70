#include "tweezer/propagator.hpp"

#include "tweezer/error.hpp"
#include "tweezer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace tweezer {

namespace {

// Outside |x - r| <= 5 w0 the Gaussian is below e^-50 and its phase is exactly 1.
constexpr double kPotentialReachInWaists = 5.0;

}  // namespace

EvolutionPlan EvolutionPlan::from_pulse(const TrapParams& trap, const Pulse& pulse, double dt, double t_total,
                                        const NoiseRealization* noise) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (t_total + 1e-9 < pulse.duration()) throw ConfigError("evolution must cover the whole pulse");
  EvolutionPlan plan;
  plan.trap = trap;
  plan.dt = dt;
  plan.n_steps = static_cast<int>(std::llround(t_total / dt));
  plan.center_um = pulse.sample(dt, plan.n_steps * dt);
  const auto nodes = plan.center_um.size();
  if (noise) {
    if (noise->size() != nodes) throw DimensionError("noise realization length does not match the time grid");
    plan.depth_factor = noise->depth_factor;
    plan.waist_factor = noise->waist_factor;
    for (std::size_t k = 0; k < nodes; ++k) plan.center_um[k] += noise->position_offset[k];
  } else {
    plan.depth_factor.assign(nodes, 1.0);
    plan.waist_factor.assign(nodes, 1.0);
  }
  return plan;
}

EvolutionPlan EvolutionPlan::static_trap(const TrapParams& trap, double dt, double t_total) {
  return from_pulse(trap, Pulse::piecewise_quadratic(trap.center_um, trap.center_um, std::max(dt, t_total)), dt,
                    std::max(dt, t_total));
}

void EvolutionPlan::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (n_steps < 0) throw ConfigError("negative step count");
  const auto nodes = static_cast<std::size_t>(n_steps) + 1;
  if (center_um.size() != nodes || depth_factor.size() != nodes || waist_factor.size() != nodes)
    throw DimensionError("trap trajectory must have n_steps + 1 nodes");
  if (!(trap.waist_um > 0.0)) throw ConfigError("trap waist must be positive");
  for (std::size_t k = 0; k < nodes; ++k)
    if (!std::isfinite(center_um[k]) || !std::isfinite(depth_factor[k]) || !(waist_factor[k] > 0.0))
      throw ConfigError("non-finite or non-positive trap trajectory at node " + std::to_string(k));
}

EvolutionPlan EvolutionPlan::time_reversed() const {
  EvolutionPlan out = *this;
  std::reverse(out.center_um.begin(), out.center_um.end());
  std::reverse(out.depth_factor.begin(), out.depth_factor.end());
  std::reverse(out.waist_factor.begin(), out.waist_factor.end());
  return out;
}

Observables measure(const WaveFunction& psi) {
  const auto& g = psi.grid();
  const Eigen::ArrayXd rho = psi.amplitudes().cwiseAbs2().array();
  Observables o;
  const double total = rho.sum();
  o.norm = g.dx() * total;
  const auto& x = g.positions().array();
  o.mean_x = (rho * x).sum() / total;
  o.sigma_x = std::sqrt(std::max(0.0, (rho * (x - o.mean_x).square()).sum() / total));

  Eigen::VectorXcd phi(g.size());
  g.forward(psi.amplitudes().data(), phi.data());
  const Eigen::ArrayXd rk = phi.cwiseAbs2().array();
  const auto& k = g.wavenumbers().array();
  const double ktotal = rk.sum();
  o.mean_k = (rk * k).sum() / ktotal;
  o.sigma_k = std::sqrt(std::max(0.0, (rk * (k - o.mean_k).square()).sum() / ktotal));
  return o;
}

namespace {

void record_node(const WaveFunction& psi, const EvolutionPlan& plan, int node, Trajectory& traj) {
  if (plan.record_observables) traj.nodes.push_back(measure(psi));
  if (plan.snapshot_stride > 0 && node % plan.snapshot_stride == 0) {
    traj.snapshot_nodes.push_back(node);
    traj.snapshots.push_back(psi.amplitudes().cwiseAbs2());
  }
}

// Evolves a group of members in lockstep so the potential phase is built once per step.
void evolve_group(std::vector<WaveFunction>& states, std::vector<Trajectory>& trajs, int first_index,
                  const EvolutionPlan& plan, const NodeObserver& observer, const UnitSystem& units) {
  if (states.empty()) return;
  const auto& g = states.front().grid();
  const int n = g.size();
  const double dt = plan.dt;

  Eigen::VectorXcd kinetic(n);
  const auto& k = g.wavenumbers();
  for (int j = 0; j < n; ++j) kinetic[j] = std::polar(1.0 / n, -units.kinetic_prefactor() * k[j] * k[j] * dt);

  Eigen::VectorXcd half_phase(n);
  Eigen::VectorXcd work(n);
  const double u0 = plan.trap.depth_internal(units);
  const auto& x = g.positions();

  for (std::size_t m = 0; m < states.size(); ++m) {
    trajs[m].dt = dt;
    record_node(states[m], plan, 0, trajs[m]);
    if (observer) observer(first_index + static_cast<int>(m), 0, states[m]);
  }

  for (int step = 0; step < plan.n_steps; ++step) {
    const auto s = static_cast<std::size_t>(step);
    const double center = 0.5 * (plan.center_um[s] + plan.center_um[s + 1]);
    const double depth = 0.5 * (plan.depth_factor[s] + plan.depth_factor[s + 1]) * u0;
    const double waist = 0.5 * (plan.waist_factor[s] + plan.waist_factor[s + 1]) * plan.trap.waist_um;

    int lo = 0, hi = -1;
    if (depth != 0.0) {
      const double reach = kPotentialReachInWaists * waist;
      lo = static_cast<int>(std::max(0.0, std::floor((center - reach - g.x_min()) / g.dx())));
      hi = static_cast<int>(std::min<double>(n - 1, std::ceil((center + reach - g.x_min()) / g.dx())));
      const double inv_w2 = 2.0 / (waist * waist);
      for (int j = lo; j <= hi; ++j) {
        const double z = x[j] - center;
        half_phase[j] = std::polar(1.0, -0.5 * dt * depth * std::exp(-z * z * inv_w2));
      }
    }

    const int len = hi - lo + 1;
    const auto phase = half_phase.segment(lo, len).array();
    for (std::size_t m = 0; m < states.size(); ++m) {
      auto& amps = states[m].amplitudes();
      cplx* psi = amps.data();
      amps.segment(lo, len).array() *= phase;
      g.forward(psi, work.data());
      work.array() *= kinetic.array();
      g.backward(work.data(), psi);
      amps.segment(lo, len).array() *= phase;
      if (!std::isfinite(std::norm(psi[n / 2])) || !std::isfinite(std::norm(psi[0])))
        throw NumericalError("non-finite amplitudes at step " + std::to_string(step + 1));
      record_node(states[m], plan, step + 1, trajs[m]);
      if (observer) observer(first_index + static_cast<int>(m), step + 1, states[m]);
    }
  }
}

}  // namespace

EvolutionResult evolve(const WaveFunction& psi0, const EvolutionPlan& plan, const UnitSystem& units) {
  auto ens = evolve_ensemble(std::span<const WaveFunction>(&psi0, 1), plan, 1, {}, units);
  return {std::move(ens.states.front()), std::move(ens.trajectories.front())};
}

EnsembleEvolution evolve_ensemble(std::span<const WaveFunction> states, const EvolutionPlan& plan, int workers,
                                  const NodeObserver& observer, const UnitSystem& units) {
  plan.validate();
  EnsembleEvolution out;
  out.states.assign(states.begin(), states.end());
  out.trajectories.resize(states.size());
  for (const auto& s : out.states)
    if (!s.grid().same_as(out.states.front().grid())) throw DimensionError("ensemble members on different grids");

  const int n = static_cast<int>(states.size());
  workers = std::clamp(resolve_workers(workers), 1, std::max(1, n));
  if (workers == 1) {
    evolve_group(out.states, out.trajectories, 0, plan, observer, units);
    return out;
  }
  parallel_for(workers, workers, [&](int w) {
    const int lo = n * w / workers;
    const int hi = n * (w + 1) / workers;
    std::vector<WaveFunction> group(out.states.begin() + lo, out.states.begin() + hi);
    std::vector<Trajectory> trajs(static_cast<std::size_t>(hi - lo));
    evolve_group(group, trajs, lo, plan, observer, units);
    std::move(group.begin(), group.end(), out.states.begin() + lo);
    std::move(trajs.begin(), trajs.end(), out.trajectories.begin() + lo);
  });
  return out;
}

WaveFunction free_evolve(const WaveFunction& psi, double duration_us, const UnitSystem& units) {
  if (duration_us < 0.0) throw ConfigError("free evolution time must be non-negative");
  if (duration_us == 0.0) return psi;
  const auto& g = psi.grid();
  const int n = g.size();
  Eigen::VectorXcd work(n);
  g.forward(psi.amplitudes().data(), work.data());
  const auto& k = g.wavenumbers();
  for (int j = 0; j < n; ++j) work[j] *= std::polar(1.0 / n, -units.kinetic_prefactor() * k[j] * k[j] * duration_us);
  WaveFunction out(psi.grid_ptr());
  g.backward(work.data(), out.amplitudes().data());
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t_us,mean_x_um,mean_k_per_um,sigma_x_um,sigma_k_per_um,norm\n" << std::setprecision(12);
  for (std::size_t k = 0; k < trajectory.nodes.size(); ++k) {
    const auto& o = trajectory.nodes[k];
    out << static_cast<double>(k) * trajectory.dt << ',' << o.mean_x << ',' << o.mean_k << ',' << o.sigma_x << ','
        << o.sigma_k << ',' << std::setprecision(15) << o.norm << std::setprecision(12) << '\n';
  }
}

}  // namespace tweezer
