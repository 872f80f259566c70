#pragma once

#include "tweezer/grid.hpp"
#include "tweezer/units.hpp"

#include <Eigen/Dense>

namespace tweezer {

/// Gaussian tweezer: V(x) = U0 exp(-2 (x - r)^2 / w0^2).
struct TrapParams {
  double depth_mk = -1.0;   // negative is attractive
  double waist_um = 0.5;
  double center_um = 0.0;

  [[nodiscard]] double depth_internal(const UnitSystem& units = {}) const {
    (void)units;
    return UnitSystem::energy_from_millikelvin(depth_mk);
  }
};

/// Potential on the grid in rad/us, centered at params.center_um.
Eigen::VectorXd potential_at(const TrapParams& params, const SpatialGrid& grid);
/// Same, with an explicit center r (um).
Eigen::VectorXd potential_at(const TrapParams& params, const SpatialGrid& grid, double r);

/// Harmonic approximation of the trap frequency, sqrt(4 |U0| / (m w0^2)), in rad/us.
double harmonic_frequency(const TrapParams& params, const UnitSystem& units = {});

/// Half-width of the central window holding the given fraction of the normalized
/// Gaussian profile exp(-2 (x - r)^2 / w0^2) (standard deviation w0 / 2).
/// A fraction of 0.3 gives the 35th-65th percentile band.
double profile_quantile_halfwidth(double waist_um, double central_fraction);

}  // namespace tweezer
