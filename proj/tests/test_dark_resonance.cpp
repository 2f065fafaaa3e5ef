#include <doctest.h>

#include <cmath>
#include <vector>

#include "stirap_lab/dark_resonance.hpp"

using namespace stirap_lab;

namespace {

LambdaSystem eit_system(double probe_mhz, double pump_mhz) {
  LambdaSystem sys;
  sys.omega1_peak = two_pi * probe_mhz * 1e6;
  sys.omega2_peak = two_pi * pump_mhz * 1e6;
  sys.gamma_e = two_pi * 6e6;
  return sys;
}

}  // namespace

TEST_CASE("the probe alone removes all population") {
  LambdaSystem sys = eit_system(0.5, 0.0);
  const auto scan = dark_resonance_scan(sys, 20e-6, {0.0}, ScanAxis::two_photon);
  CHECK(scan.front().remaining <= 0.01);
}

TEST_CASE("strong pump on two-photon resonance protects the population") {
  LambdaSystem sys = eit_system(0.5, 10.0);  // pump/probe = 20, gamma_e >> probe
  const auto scan = dark_resonance_scan(sys, 20e-6, {0.0}, ScanAxis::two_photon);
  CHECK(scan.front().remaining >= 0.9);

  // steady-state picture: the sudden projection onto the dark state keeps
  // cos^4(theta) with tan(theta) = probe/pump; the rest is lost
  const double tan_theta = sys.omega1_peak / sys.omega2_peak;
  const double cos2 = 1.0 / (1.0 + tan_theta * tan_theta);
  CHECK(scan.front().remaining == doctest::Approx(cos2 * cos2).epsilon(0.02));
}

TEST_CASE("lineshape is symmetric about the Raman resonance") {
  LambdaSystem sys = eit_system(0.4, 5.0);
  std::vector<double> detunings;
  for (int k = -6; k <= 6; ++k) detunings.push_back(two_pi * 1e6 * k / 2.0);
  const auto scan = dark_resonance_scan(sys, 10e-6, detunings, ScanAxis::two_photon);
  const std::size_t n = scan.size();
  for (std::size_t k = 0; k < n / 2; ++k)
    CHECK(scan[k].remaining ==
          doctest::Approx(scan[n - 1 - k].remaining).epsilon(1e-6));
}

TEST_CASE("far off one-photon resonance the population is retained") {
  LambdaSystem sys = eit_system(0.5, 8.0);
  const auto scan = dark_resonance_scan(sys, 20e-6, {two_pi * 200e6},
                                        ScanAxis::one_photon);
  CHECK(scan.front().remaining >= 0.9);
}

TEST_CASE("one-photon scan shows the transparency peak between loss side-lobes") {
  LambdaSystem sys = eit_system(0.5, 8.0);
  const auto scan = dark_resonance_scan(
      sys, 12e-6, {0.0, two_pi * 3e6, two_pi * 60e6}, ScanAxis::one_photon);
  const double at_center = scan[0].remaining;
  const double in_lobe = scan[1].remaining;
  const double far_away = scan[2].remaining;
  CHECK(at_center > 5.0 * in_lobe);
  CHECK(far_away > 5.0 * in_lobe);
}

TEST_CASE("transparency width grows strictly with the pump Rabi frequency") {
  double previous = 0.0;
  for (double pump : {1.25, 2.5, 5.0, 10.0}) {
    LambdaSystem sys = eit_system(0.25, pump);
    const double width = dark_resonance_width(sys, 20e-6);
    CHECK(width > previous);
    previous = width;
  }
}

TEST_CASE("the window closes as the pump vanishes") {
  const double wide = dark_resonance_width(eit_system(0.25, 4.0), 20e-6);
  const double narrow = dark_resonance_width(eit_system(0.25, 0.5), 20e-6);
  CHECK(narrow < wide / 10.0);
}

TEST_CASE("reduced powers give the 500 kHz spectroscopy operating point") {
  // operating point used for the Stark measurements
  LambdaSystem sys = eit_system(0.3, 2.5);
  const double width = dark_resonance_width(sys, 40e-6);
  CHECK(width == doctest::Approx(500e3).epsilon(0.2));
}

TEST_CASE("no transparency peak is an explicit error") {
  LambdaSystem sys = eit_system(0.5, 0.0);  // pump off: pure loss, no window
  CHECK_THROWS_AS(dark_resonance_width(sys, 20e-6), std::runtime_error);
}

TEST_CASE("scan validates its inputs") {
  LambdaSystem sys = eit_system(0.5, 5.0);
  CHECK_THROWS_AS(dark_resonance_scan(sys, 0.0, {0.0}, ScanAxis::two_photon),
                  std::invalid_argument);
}
