#include "tweezer/fidelity.hpp"

#include "tweezer/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

namespace tweezer {

namespace {

void check_weights(std::span<const double> w, const char* what) {
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError(std::string(what) + " weights are not normalized");
  for (double v : w)
    if (v < 0.0) throw ConfigError(std::string(what) + " weights must be non-negative");
}

Eigen::MatrixXcd overlap_matrix(std::span<const WaveFunction> a, std::span<const WaveFunction> b) {
  Eigen::MatrixXcd o(static_cast<long>(a.size()), static_cast<long>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      o(static_cast<long>(i), static_cast<long>(j)) = inner_product(a[i], b[j]);
  return o;
}

}  // namespace

double uhlmann_infidelity_from_overlaps(std::span<const double> p, std::span<const double> q,
                                        const Eigen::MatrixXcd& overlaps) {
  check_weights(p, "first ensemble");
  check_weights(q, "second ensemble");
  if (overlaps.rows() != static_cast<long>(p.size()) || overlaps.cols() != static_cast<long>(q.size()))
    throw DimensionError("overlap matrix shape does not match the weights");
  Eigen::VectorXd sp(static_cast<long>(p.size())), sq(static_cast<long>(q.size()));
  for (std::size_t i = 0; i < p.size(); ++i) sp[static_cast<long>(i)] = std::sqrt(p[i]);
  for (std::size_t j = 0; j < q.size(); ++j) sq[static_cast<long>(j)] = std::sqrt(q[j]);

  // sqrt(lambda_k(M)) are the singular values of D_p^1/2 O D_q^1/2; taking them directly
  // avoids square roots of rounding-level eigenvalues when the ranks differ.
  const Eigen::MatrixXcd a = sp.asDiagonal() * overlaps * sq.asDiagonal();
  const double trace_root = Eigen::JacobiSVD<Eigen::MatrixXcd>(a).singularValues().sum();
  return 1.0 - trace_root * trace_root;
}

double uhlmann_infidelity(std::span<const double> p, std::span<const WaveFunction> a,
                          std::span<const double> q, std::span<const WaveFunction> b) {
  if (p.size() != a.size() || q.size() != b.size()) throw DimensionError("one weight per ensemble member required");
  return uhlmann_infidelity_from_overlaps(p, q, overlap_matrix(a, b));
}

int transport_steps(const Pulse& pulse, const TransportSettings& settings) {
  return static_cast<int>(std::llround((pulse.duration() + settings.hold_us) / settings.dt));
}

FomRecord time_averaged_fom(const ThermalEnsemble& initial, const ThermalEnsemble& target,
                            const TrapParams& trap, const Pulse& pulse, const TransportSettings& settings) {
  if (initial.cutoff() != target.cutoff()) throw DimensionError("initial and target ensembles differ in rank");
  if (settings.hold_us < 0.0) throw ConfigError("averaging window must be non-negative");
  const auto plan = EvolutionPlan::from_pulse(trap, pulse, settings.dt,
                                              transport_steps(pulse, settings) * settings.dt, settings.noise);
  const int first = static_cast<int>(std::llround(pulse.duration() / settings.dt));
  const int window = plan.n_steps - first + 1;
  const int rank = initial.cutoff();

  const auto& grid = initial.states.front().grid();
  Eigen::MatrixXcd targets(grid.size(), rank);
  for (int j = 0; j < rank; ++j) {
    const auto& t = target.states[static_cast<std::size_t>(j)];
    if (!t.grid().same_as(grid)) throw DimensionError("target ensemble lives on a different grid");
    targets.col(j) = t.amplitudes();
  }
  std::vector<Eigen::MatrixXcd> overlaps(static_cast<std::size_t>(window), Eigen::MatrixXcd(rank, rank));
  const int band = std::min(grid.size() / 4, static_cast<int>(std::ceil(trap.waist_um / grid.dx())));
  std::vector<double> edge(static_cast<std::size_t>(rank), 0.0);
  const NodeObserver observer = [&](int i, int node, const WaveFunction& psi) {
    const auto& a = psi.amplitudes();
    const double at_edges = (a.head(band).squaredNorm() + a.tail(band).squaredNorm()) * grid.dx();
    edge[static_cast<std::size_t>(i)] = std::max(edge[static_cast<std::size_t>(i)], at_edges);
    if (node < first) return;
    // row i of O: <psi_i | target_j> = conj(target_j^dagger psi_i)
    overlaps[static_cast<std::size_t>(node - first)].row(i) =
        (targets.adjoint() * psi.amplitudes()).conjugate().transpose() * grid.dx();
  };
  auto evolved = evolve_ensemble(initial.states, plan, settings.workers, observer, settings.units);

  FomRecord rec;
  rec.hold_us = settings.hold_us;
  for (int w = 0; w < window; ++w) {
    rec.times_us.push_back((first + w) * settings.dt);
    rec.infidelity.push_back(uhlmann_infidelity_from_overlaps(initial.weights, target.weights,
                                                              overlaps[static_cast<std::size_t>(w)]));
  }
  rec.average = std::accumulate(rec.infidelity.begin(), rec.infidelity.end(), 0.0) / window;
  for (int i = 0; i < rank; ++i) rec.edge_probability += initial.weights[static_cast<std::size_t>(i)] * edge[static_cast<std::size_t>(i)];
  rec.lost = rec.edge_probability > kEdgeLossLimit;
  if (rec.lost) rec.average = 1.0;
  rec.final_states = std::move(evolved.states);
  return rec;
}

double recapture_probability(std::span<const double> weights, std::span<const WaveFunction> states,
                             double waist_um, double center_um, double tau_rc_us, double central_fraction,
                             const UnitSystem& units) {
  if (tau_rc_us < 0.0) throw ConfigError("release time must be non-negative");
  if (weights.size() != states.size()) throw DimensionError("one weight per state required");
  const double half = profile_quantile_halfwidth(waist_um, central_fraction);
  double p = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const WaveFunction released = free_evolve(states[i], tau_rc_us, units);
    const auto& g = released.grid();
    double inside = 0.0;
    for (int j = 0; j < g.size(); ++j)
      if (std::abs(g.position(j) - center_um) <= half) inside += std::norm(released.amplitudes()[j]);
    p += weights[i] * inside * g.dx();
  }
  return std::clamp(p, 0.0, 1.0);
}

RecaptureCurve recapture_curve(std::span<const double> weights, std::span<const WaveFunction> states,
                               double waist_um, double center_um, std::span<const double> tau_grid_us,
                               int transports, double central_fraction, const UnitSystem& units) {
  RecaptureCurve c;
  c.transports = transports;
  for (double tau : tau_grid_us) {
    c.tau_us.push_back(tau);
    c.probability.push_back(recapture_probability(weights, states, waist_um, center_um, tau, central_fraction, units));
  }
  return c;
}

std::vector<WaveFunction> multi_transport(std::span<const WaveFunction> states, const TrapParams& trap,
                                          const Pulse& pulse, int n_transports, double dt, int workers,
                                          const UnitSystem& units) {
  if (n_transports < 1 || n_transports % 2 == 0)
    throw ConfigError("number of transports must be odd and at least 1");
  const auto forward = EvolutionPlan::from_pulse(trap, pulse, dt, pulse.duration());
  const auto backward = EvolutionPlan::from_pulse(trap, pulse.reversed(), dt, pulse.duration());
  std::vector<WaveFunction> current(states.begin(), states.end());
  for (int leg = 0; leg < n_transports; ++leg)
    current = evolve_ensemble(current, leg % 2 == 0 ? forward : backward, workers, {}, units).states;
  return current;
}

void write_fom_csv(std::ostream& out, const FomRecord& record) {
  out << "t_us,infidelity\n" << std::setprecision(12);
  for (std::size_t k = 0; k < record.times_us.size(); ++k)
    out << record.times_us[k] << ',' << record.infidelity[k] << '\n';
}

void write_recapture_csv(std::ostream& out, std::span<const RecaptureCurve> curves,
                         std::span<const std::string> labels) {
  out << "pulse,n_transports,tau_us,probability\n" << std::setprecision(12);
  for (std::size_t c = 0; c < curves.size(); ++c)
    for (std::size_t k = 0; k < curves[c].tau_us.size(); ++k)
      out << labels[c] << ',' << curves[c].transports << ',' << curves[c].tau_us[k] << ','
          << curves[c].probability[k] << '\n';
}

}  // namespace tweezer
