#pragma once

// Internal unit system: lengths in micrometers, times in microseconds and
// energies in hbar / microsecond (rad/us). Everything user-facing is quoted in
// um, us, mK, uK or MHz and converted here.

namespace tweezer {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double boltzmann = 1.380649e-23;   // J / K
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double strontium88_mass = 1.46e-25;  // kg
}  // namespace constants

struct UnitSystem {
  double mass_kg = constants::strontium88_mass;

  /// hbar / (2 m) in um^2 / us. Kinetic energy of a plane wave is this times k^2.
  [[nodiscard]] double kinetic_prefactor() const {
    return constants::hbar / (2.0 * mass_kg) * 1e12 / 1e6;
  }
  /// m / hbar in us / um^2, the factor between velocity and wavenumber.
  [[nodiscard]] double mass_over_hbar() const { return 0.5 / kinetic_prefactor(); }

  /// k_B / hbar in (rad/us) per kelvin.
  [[nodiscard]] static constexpr double kb_over_hbar() {
    return constants::boltzmann / constants::hbar * 1e-6;
  }

  [[nodiscard]] static constexpr double energy_from_millikelvin(double mk) {
    return kb_over_hbar() * mk * 1e-3;
  }
  [[nodiscard]] static constexpr double energy_from_microkelvin(double uk) {
    return kb_over_hbar() * uk * 1e-6;
  }
  [[nodiscard]] static constexpr double energy_to_microkelvin(double e) {
    return e / kb_over_hbar() * 1e6;
  }
};

}  // namespace tweezer
