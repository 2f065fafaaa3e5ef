#pragma once

namespace stirap_lab {

/// Physical constants in SI units. CODATA 2018 values except where the
/// 2019 SI redefinition fixes them exactly.
struct PhysicalConstants {
  double planck_h = 6.62607015e-34;    // J s (exact)
  double hbar = 1.054571817e-34;       // J s
  double eps0 = 8.8541878128e-12;      // F/m
  double c = 299792458.0;              // m/s (exact)
  double debye_si = 3.336e-30;         // C m per Debye
  double ea0_si = 8.4783536255e-30;    // C m per e*a0
  double boltzmann = 1.380649e-23;     // J/K (exact)
};

inline constexpr PhysicalConstants constants{};

inline constexpr double two_pi = 6.283185307179586476925286766559;

}  // namespace stirap_lab
