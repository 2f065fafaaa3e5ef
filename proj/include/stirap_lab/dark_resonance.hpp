#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stirap_lab/constants.hpp"
#include "stirap_lab/master_equation.hpp"

namespace stirap_lab {

/// two_photon: the down-leg laser is scanned, so only the Raman detuning
/// delta takes the scan value while Delta stays at the system value.
/// one_photon: the up-leg laser is scanned; Delta takes the scan value and
/// delta moves with it (both detunings shift with the up-leg frequency).
enum class ScanAxis { two_photon, one_photon };

struct ScanPoint {
  double detuning = 0.0;   // rad/s, on the scanned axis
  double remaining = 0.0;  // |i> population after the pulse
};

namespace detail {

inline LambdaSystem with_detuning(const LambdaSystem& sys, double value,
                                  ScanAxis axis) {
  LambdaSystem s = sys;
  if (axis == ScanAxis::two_photon) {
    s.delta_two_photon = value;
  } else {
    s.delta_one_photon = value;
    s.delta_two_photon = sys.delta_two_photon + (value - sys.delta_one_photon);
  }
  return s;
}

inline double remaining_population(const LambdaSystem& sys, double pulse_duration,
                                   const EvolveOptions& opts) {
  const PulseSchedule pulse = PulseSchedule::square(pulse_duration);
  const QuantumState out = evolve_final(sys, pulse, QuantumState::pure(Level::i),
                                        0.0, pulse_duration, opts);
  return out.population(Level::i);
}

}  // namespace detail

/// Square-pulse loss spectroscopy: evolve pure |i> for pulse_duration at
/// each detuning and report the surviving |i> population.
inline std::vector<ScanPoint> dark_resonance_scan(const LambdaSystem& sys,
                                                  double pulse_duration,
                                                  const std::vector<double>& scan,
                                                  ScanAxis axis,
                                                  const EvolveOptions& opts = {}) {
  sys.validate();
  if (!(pulse_duration > 0.0))
    throw std::invalid_argument("pulse_duration must be > 0");
  std::vector<ScanPoint> points;
  points.reserve(scan.size());
  for (double value : scan) {
    const LambdaSystem s = detail::with_detuning(sys, value, axis);
    points.push_back({value, detail::remaining_population(s, pulse_duration, opts)});
  }
  return points;
}

/// FWHM in Hz of the transparency peak of the surviving population versus
/// two-photon detuning, centred on the system's Raman resonance.  The
/// half level sits midway between the peak and the loss floor away from
/// the window; the crossings on both sides are located by bisection.
inline double dark_resonance_width(const LambdaSystem& sys, double pulse_duration,
                                   const EvolveOptions& opts = {}) {
  sys.validate();
  if (!(pulse_duration > 0.0))
    throw std::invalid_argument("pulse_duration must be > 0");

  const double center = sys.delta_two_photon;
  auto probe = [&](double delta) {
    const LambdaSystem s =
        detail::with_detuning(sys, center + delta, ScanAxis::two_photon);
    return detail::remaining_population(s, pulse_duration, opts);
  };

  const double peak = probe(0.0);

  // Loss floor: walk outward until the response stops changing.
  double scale = std::max(sys.omega2_peak, 1.0 / pulse_duration);
  double floor_offset = 4.0 * scale;
  double floor = probe(floor_offset);
  for (int k = 0; k < 20; ++k) {
    const double next = probe(2.0 * floor_offset);
    if (std::abs(next - floor) < 1e-3) break;
    floor_offset *= 2.0;
    floor = next;
  }
  if (peak - floor < 0.02)
    throw std::runtime_error(
        "dark_resonance_width: no resolvable transparency peak");

  const double half = 0.5 * (peak + floor);

  auto crossing = [&](double sign) {
    // geometric sweep to bracket the first drop below the half level
    double lo = 0.0, hi = floor_offset * 1e-3;
    while (probe(sign * hi) > half) {
      lo = hi;
      hi *= 2.0;
      if (hi > 4.0 * floor_offset)
        throw std::runtime_error(
            "dark_resonance_width: half level never crossed");
    }
    for (int k = 0; k < 60 && (hi - lo) > 1e-6 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (probe(sign * mid) > half ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  return (crossing(+1.0) + crossing(-1.0)) / two_pi;
}

}  // namespace stirap_lab
