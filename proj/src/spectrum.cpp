#include "tweezer/spectrum.hpp"

#include "tweezer/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tweezer {

namespace {

// First row of the spectral second-derivative-based kinetic matrix on a periodic
// window of n points: t(m) = (1/n) sum_j K k_j^2 cos(k_j m dx).
Eigen::VectorXd kinetic_row(int n, double dx, double prefactor) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
  const double dk = 2.0 * constants::pi / (n * dx);
  for (int j = 0; j < n; ++j) {
    const double k = (j <= n / 2 ? j : j - n) * dk;
    const double ek = prefactor * k * k;
    for (int m = 0; m < n; ++m) row[m] += ek * std::cos(k * m * dx);
  }
  return row / n;
}

void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cplx p = v[imax] / std::abs(v[imax]);
  v /= p;
}

}  // namespace

TrapSpectrum solve_spectrum(const TrapParams& params, const GridPtr& grid, int n_states,
                            const SpectrumOptions& options, const UnitSystem& units) {
  if (n_states < 1) throw ConfigError("at least one trap state must be requested");
  if (!(params.depth_mk < 0.0)) throw ConfigError("trap depth must be negative (attractive)");
  if (!(params.waist_um > 0.0)) throw ConfigError("trap waist must be positive");

  const double dx = grid->dx();
  const double half = options.window_halfwidth_um > 0.0 ? options.window_halfwidth_um : 2.0 * params.waist_um;
  int lo = grid->nearest_index(params.center_um - half);
  int hi = grid->nearest_index(params.center_um + half);
  if ((hi - lo + 1) % 2 != 0) hi = hi + 1 < grid->size() ? hi + 1 : hi - 1;
  const int n = hi - lo + 1;
  if (n < n_states) throw ConfigError("diagonalization window holds fewer points than requested states");

  const Eigen::VectorXd row = kinetic_row(n, dx, units.kinetic_prefactor());
  const Eigen::VectorXd v = potential_at(params, *grid).segment(lo, n);
  Eigen::MatrixXd h(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) h(a, b) = row[std::abs(a - b)];
  h.diagonal() += v;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("trap Hamiltonian diagonalization failed");

  TrapSpectrum spec;
  spec.requested = n_states;
  for (int i = 0; i < n_states; ++i) {
    const double e = solver.eigenvalues()[i];
    if (!(e < 0.0)) {
      spec.truncated = true;
      break;
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(grid->size());
    psi.segment(lo, n) = solver.eigenvectors().col(i).cast<cplx>() / std::sqrt(dx);
    fix_phase(psi);
    WaveFunction w(grid, std::move(psi));
    w.normalize();
    spec.energies.push_back(e);
    spec.states.push_back(std::move(w));
  }
  return spec;
}

Eigen::VectorXcd apply_hamiltonian(const TrapParams& params, const WaveFunction& psi, const UnitSystem& units) {
  const auto& g = psi.grid();
  Eigen::VectorXcd phi(g.size()), out(g.size());
  g.forward(psi.amplitudes().data(), phi.data());
  phi.array() *= g.wavenumbers().array().square() * (units.kinetic_prefactor() / g.size());
  g.backward(phi.data(), out.data());
  out.array() += potential_at(params, g).array() * psi.amplitudes().array();
  return out;
}

std::vector<double> boltzmann_weights(const std::vector<double>& energies, double temperature_uk, int n_states) {
  if (!(temperature_uk > 0.0)) throw ConfigError("temperature must be positive");
  if (n_states < 1) throw ConfigError("state cutoff must be at least 1");
  if (static_cast<std::size_t>(n_states) > energies.size()) {
    std::ostringstream msg;
    msg << "state cutoff " << n_states << " exceeds the " << energies.size() << " available bound states";
    throw ConfigError(msg.str());
  }
  const double kt = UnitSystem::energy_from_microkelvin(temperature_uk);
  std::vector<double> p(static_cast<std::size_t>(n_states));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(-(energies[i] - energies[0]) / kt);
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& w : p) w /= z;
  return p;
}

ThermalEnsemble thermal_ensemble(const TrapSpectrum& spectrum, double temperature_uk, int n_states) {
  ThermalEnsemble ens;
  ens.weights = boltzmann_weights(spectrum.energies, temperature_uk, n_states);
  ens.states.assign(spectrum.states.begin(), spectrum.states.begin() + n_states);
  ens.energies.assign(spectrum.energies.begin(), spectrum.energies.begin() + n_states);
  ens.temperature_uk = temperature_uk;
  return ens;
}

double cutoff_fidelity(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() > q.size()) throw DimensionError("reference cutoff must not be smaller than the compared one");
  for (const auto* w : {&p, &q}) {
    const double s = std::accumulate(w->begin(), w->end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("cutoff fidelity needs normalized weights");
  }
  double f = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) f += std::sqrt(p[i] * q[i]);
  return f * f;
}

WaveFunction shifted_state(const WaveFunction& psi, double shift_um) {
  const auto& g = psi.grid();
  const auto& amp = psi.amplitudes();
  const double peak = amp.cwiseAbs().maxCoeff();
  for (int j = 0; j < g.size(); ++j) {
    const double target = g.position(j) + shift_um;
    if ((target < g.x_min() || target >= g.x_max()) && std::abs(amp[j]) > 1e-6 * peak)
      throw ConfigError("shift moves a significant part of the state off the grid");
  }
  Eigen::VectorXcd phi(g.size());
  g.forward(amp.data(), phi.data());
  const auto& k = g.wavenumbers();
  const int n = g.size();
  for (int j = 0; j < n; ++j) {
    // The Nyquist mode has no unique sign; shifting its real cosine keeps real states real.
    if (j == n / 2) phi[j] *= std::cos(k[j] * shift_um) / n;
    else phi[j] *= std::polar(1.0 / n, -k[j] * shift_um);
  }
  WaveFunction out(psi.grid_ptr());
  g.backward(phi.data(), out.amplitudes().data());
  return out;
}

ThermalEnsemble shifted_ensemble(const ThermalEnsemble& ensemble, double shift_um) {
  ThermalEnsemble out = ensemble;
  if (shift_um == 0.0) return out;
  for (auto& s : out.states) s = shifted_state(s, shift_um);
  return out;
}

}  // namespace tweezer
