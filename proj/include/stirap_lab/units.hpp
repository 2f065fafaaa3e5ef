#pragma once

#include <cmath>
#include <stdexcept>

#include "stirap_lab/constants.hpp"

namespace stirap_lab {

inline double debye_to_si(double d_debye) { return d_debye * constants.debye_si; }

inline double si_to_debye(double d_si) { return d_si / constants.debye_si; }

inline double ea0_to_debye(double d_ea0) {
  return d_ea0 * constants.ea0_si / constants.debye_si;
}

inline double debye_to_ea0(double d_debye) {
  return d_debye * constants.debye_si / constants.ea0_si;
}

/// Peak electric field amplitude of a Gaussian beam of total power
/// `power` focused to a 1/e^2 intensity radius `waist`.  Peak intensity
/// I = 2P/(pi w^2), E = sqrt(2 I / (eps0 c)).
inline double field_amplitude_from_power(double power, double waist) {
  if (!(waist > 0.0)) throw std::invalid_argument("waist must be positive");
  if (!(power >= 0.0) || !std::isfinite(power))
    throw std::invalid_argument("power must be finite and non-negative");
  const double intensity = 2.0 * power / (M_PI * waist * waist);
  return std::sqrt(2.0 * intensity / (constants.eps0 * constants.c));
}

/// Rabi frequency d*E/hbar (rad/s) for a transition dipole in e*a0 driven
/// by a Gaussian beam of the given power and waist.
inline double rabi_frequency(double dipole_ea0, double power, double waist) {
  const double field = field_amplitude_from_power(power, waist);
  return dipole_ea0 * constants.ea0_si * field / constants.hbar;
}

/// Transition dipole moment in e*a0 from a measured Rabi frequency and the
/// beam parameters that produced it.
inline double dipole_from_rabi(double omega, double power, double waist) {
  if (!(omega >= 0.0)) throw std::invalid_argument("omega must be non-negative");
  if (omega > 0.0 && !(power > 0.0))
    throw std::invalid_argument("power must be positive for nonzero omega");
  if (omega == 0.0) return 0.0;
  const double field = field_amplitude_from_power(power, waist);
  return constants.hbar * omega / field / constants.ea0_si;
}

}  // namespace stirap_lab
