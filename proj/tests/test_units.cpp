#include <doctest.h>

#include <cmath>
#include <random>

#include "stirap_lab/units.hpp"

using namespace stirap_lab;

TEST_CASE("constants are positive and carry the standard conversions") {
  CHECK(constants.planck_h > 0.0);
  CHECK(constants.hbar > 0.0);
  CHECK(constants.eps0 > 0.0);
  CHECK(constants.c > 0.0);
  CHECK(constants.boltzmann > 0.0);
  CHECK(constants.debye_si == doctest::Approx(3.336e-30).epsilon(1e-3));
  CHECK(constants.ea0_si / constants.debye_si == doctest::Approx(2.54).epsilon(5e-3));
  CHECK(constants.hbar == doctest::Approx(constants.planck_h / two_pi).epsilon(1e-9));
}

TEST_CASE("debye_to_si") {
  CHECK(debye_to_si(1.0) == doctest::Approx(3.336e-30).epsilon(1e-12));
  CHECK(debye_to_si(0.0) == 0.0);
  // 0.566 D * 3.336e-30 C m/D = 1.888e-30 C m (hand arithmetic)
  CHECK(debye_to_si(0.566) == doctest::Approx(1.888176e-30).epsilon(1e-12));
  CHECK(debye_to_si(0.566) == doctest::Approx(1.888e-30).epsilon(2e-4));
}

TEST_CASE("unit round trips are identities") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> mag(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const double d = std::pow(10.0, mag(rng));
    CHECK(si_to_debye(debye_to_si(d)) == doctest::Approx(d).epsilon(1e-12));
    CHECK(ea0_to_debye(debye_to_ea0(d)) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("field_amplitude_from_power") {
  // direct evaluation of E = sqrt(4 P / (pi w^2 eps0 c)) at the chain's inputs
  const double expected = std::sqrt(
      4.0 * 60e-6 / (M_PI * 55e-6 * 55e-6 * constants.eps0 * constants.c));
  CHECK(field_amplitude_from_power(60e-6, 55e-6) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(3.08e3).epsilon(5e-3));

  CHECK(field_amplitude_from_power(0.0, 55e-6) == 0.0);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(0.1, 10.0);
  for (int k = 0; k < 20; ++k) {
    const double p = uni(rng) * 1e-6, w = uni(rng) * 1e-5;
    CHECK(field_amplitude_from_power(4.0 * p, w) ==
          doctest::Approx(2.0 * field_amplitude_from_power(p, w)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(field_amplitude_from_power(1e-6, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(field_amplitude_from_power(1e-6, -55e-6), std::invalid_argument);
  CHECK_THROWS_AS(field_amplitude_from_power(-1e-6, 55e-6), std::invalid_argument);
}

TEST_CASE("dipole_from_rabi reproduces the measured transition dipole") {
  const double omega = two_pi * 8e6;
  const double d = dipole_from_rabi(omega, 60e-6, 55e-6);
  CHECK(d == doctest::Approx(0.20).epsilon(0.05));

  CHECK(dipole_from_rabi(0.0, 60e-6, 55e-6) == 0.0);
  CHECK(dipole_from_rabi(2.0 * omega, 60e-6, 55e-6) ==
        doctest::Approx(2.0 * d).epsilon(1e-12));
  CHECK_THROWS_AS(dipole_from_rabi(omega, 0.0, 55e-6), std::invalid_argument);
}

TEST_CASE("rabi -> dipole -> rabi closes") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(0.05, 5.0);
  for (int k = 0; k < 30; ++k) {
    const double d = uni(rng), p = uni(rng) * 1e-4, w = uni(rng) * 1e-4;
    const double omega = rabi_frequency(d, p, w);
    CHECK(dipole_from_rabi(omega, p, w) == doctest::Approx(d).epsilon(1e-10));
  }
}
