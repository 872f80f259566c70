#include "tweezer/trap.hpp"

#include "tweezer/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>

namespace tweezer {

Eigen::VectorXd potential_at(const TrapParams& params, const SpatialGrid& grid) {
  return potential_at(params, grid, params.center_um);
}

Eigen::VectorXd potential_at(const TrapParams& params, const SpatialGrid& grid, double r) {
  if (!(params.waist_um > 0.0)) throw ConfigError("trap waist must be positive");
  if (!std::isfinite(params.depth_mk) || !std::isfinite(r))
    throw ConfigError("trap depth and center must be finite");
  const double u0 = params.depth_internal();
  const double inv_w2 = 2.0 / (params.waist_um * params.waist_um);
  const auto& x = grid.positions();
  return (-(x.array() - r).square() * inv_w2).exp() * u0;
}

double harmonic_frequency(const TrapParams& params, const UnitSystem& units) {
  const double u0 = std::abs(params.depth_internal(units));
  // m in hbar-units is 1 / (2 * kinetic prefactor)
  const double inv_mass = 2.0 * units.kinetic_prefactor();
  return std::sqrt(4.0 * u0 * inv_mass / (params.waist_um * params.waist_um));
}

double profile_quantile_halfwidth(double waist_um, double central_fraction) {
  if (!(central_fraction > 0.0 && central_fraction < 1.0))
    throw ConfigError("central fraction must lie in (0, 1)");
  // upper quantile z of N(0, 1) at 0.5 + fraction / 2
  const double z = std::sqrt(2.0) * boost::math::erf_inv(central_fraction);
  return z * waist_um / 2.0;
}

}  // namespace tweezer
