#include <doctest.h>

#include <cmath>
#include <random>

#include "stirap_lab/constants.hpp"
#include "stirap_lab/master_equation.hpp"

using namespace stirap_lab;

namespace {

LambdaSystem bare_system(double o1, double o2) {
  LambdaSystem sys;
  sys.omega1_peak = o1;
  sys.omega2_peak = o2;
  return sys;
}

}  // namespace

TEST_CASE("rwa_hamiltonian structure") {
  PulseSchedule square = PulseSchedule::square(1e-6);

  SUBCASE("all couplings and detunings zero gives the zero matrix") {
    LambdaSystem sys;
    CHECK(rwa_hamiltonian(sys, square, 0.5e-6).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("entries follow peak times envelope") {
    LambdaSystem sys = bare_system(two_pi * 4e6, two_pi * 7e6);
    sys.delta_one_photon = two_pi * 1e6;
    sys.delta_two_photon = two_pi * 0.2e6;
    const Eigen::Matrix3d h = rwa_hamiltonian(sys, square, 0.5e-6);
    CHECK(h(0, 1) == doctest::Approx(0.5 * sys.omega1_peak));
    CHECK(h(1, 2) == doctest::Approx(0.5 * sys.omega2_peak));
    CHECK(h(0, 0) == 0.0);
    CHECK(h(1, 1) == doctest::Approx(-sys.delta_one_photon));
    CHECK(h(2, 2) == doctest::Approx(-sys.delta_two_photon));
    CHECK(h(0, 2) == 0.0);
    // outside the pulse support the couplings vanish
    CHECK(rwa_hamiltonian(sys, square, 2e-6)(0, 1) == 0.0);
  }

  SUBCASE("(omega2, 0, -omega1) is a zero eigenvector on two-photon resonance") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> uni(0.1, 10.0);
    for (int k = 0; k < 20; ++k) {
      LambdaSystem sys = bare_system(two_pi * uni(rng) * 1e6, two_pi * uni(rng) * 1e6);
      const Eigen::Matrix3d h = rwa_hamiltonian(sys, square, 0.5e-6);
      Eigen::Vector3d dark(sys.omega2_peak, 0.0, -sys.omega1_peak);
      dark.normalize();
      CHECK((h * dark).norm() <= 1e-12 * h.norm());
    }
  }

  SUBCASE("Hermitian for random parameters") {
    std::mt19937 rng(22);
    std::uniform_real_distribution<double> uni(-10.0, 10.0);
    for (int k = 0; k < 20; ++k) {
      LambdaSystem sys = bare_system(std::abs(uni(rng)) * 1e6, std::abs(uni(rng)) * 1e6);
      sys.delta_one_photon = uni(rng) * 1e6;
      sys.delta_two_photon = uni(rng) * 1e6;
      const Eigen::Matrix3cd h =
          rwa_hamiltonian(sys, square, 0.3e-6).cast<std::complex<double>>();
      CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("two-level Rabi limit") {
  const double omega = two_pi * 2e6;
  LambdaSystem sys = bare_system(omega, 0.0);
  const double period = two_pi / omega;
  const auto samples = evolve(sys, PulseSchedule::square(10e-6),
                              QuantumState::pure(Level::i), {0.0, 3.0 * period},
                              period / 40.0);
  for (const auto& s : samples) {
    const double expected_i = std::cos(0.5 * omega * s.t) * std::cos(0.5 * omega * s.t);
    CHECK(s.state.population(Level::i) == doctest::Approx(expected_i).epsilon(1e-6));
    CHECK(std::abs(s.state.trace() - 1.0) < 1e-8);
    CHECK(s.state.population(Level::g) < 1e-10);
  }
  // full revival after one period
  const auto revival = evolve(sys, PulseSchedule::square(10e-6),
                              QuantumState::pure(Level::i), {0.0, period}, period);
  CHECK(revival.back().state.population(Level::i) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("closed-form decay of an uncoupled state") {
  LambdaSystem sys;
  sys.gamma_g = 1.0 / 170e-6;
  const auto samples = evolve(sys, PulseSchedule::square(1e-3),
                              QuantumState::pure(Level::g), {0.0, 500e-6}, 50e-6);
  for (const auto& s : samples) {
    const double expected = std::exp(-sys.gamma_g * s.t);
    CHECK(s.state.population(Level::g) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(s.state.lost == doctest::Approx(1.0 - expected).epsilon(1e-8));
    CHECK(std::abs(s.state.trace() + s.state.lost - 1.0) < 1e-8);
  }
}

TEST_CASE("excited state decays into the lost channel") {
  LambdaSystem sys;
  sys.gamma_e = two_pi * 6e6;
  const auto samples = evolve(sys, PulseSchedule::square(1e-6),
                              QuantumState::pure(Level::e), {0.0, 300e-9}, 30e-9);
  for (const auto& s : samples) {
    CHECK(s.state.population(Level::e) ==
          doctest::Approx(std::exp(-sys.gamma_e * s.t)).epsilon(1e-8));
  }
}

TEST_CASE("laser dephasing damps the two-photon coherence only") {
  LambdaSystem sys;
  sys.laser_dephasing = 1e5;
  QuantumState state0;
  state0.rho << 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.5;
  const auto samples =
      evolve(sys, PulseSchedule::square(1e-3), state0, {0.0, 20e-6}, 5e-6);
  for (const auto& s : samples) {
    CHECK(std::abs(s.state.rho(0, 2)) ==
          doctest::Approx(0.5 * std::exp(-sys.laser_dephasing * s.t)).epsilon(1e-7));
    CHECK(s.state.population(Level::i) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(s.state.population(Level::g) == doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_CASE("trace conservation and positivity in a driven lossy run") {
  LambdaSystem sys = bare_system(two_pi * 4e6, two_pi * 7e6);
  sys.gamma_e = two_pi * 6e6;
  sys.gamma_g = 5000.0;
  sys.delta_two_photon = two_pi * 0.3e6;
  PulseSchedule schedule = PulseSchedule::stirap_gaussian(4e-6);
  const auto samples = evolve(sys, schedule, QuantumState::pure(Level::i),
                              {0.0, schedule.sequence_duration()}, 0.1e-6);
  for (const auto& s : samples) {
    CHECK(std::abs(s.state.trace() + s.state.lost - 1.0) < 1e-8);
    CHECK(s.state.hermiticity_defect() < 1e-10);
    CHECK(s.state.min_eigenvalue() >= -1e-8);
    CHECK(s.state.is_physical());
  }
}

TEST_CASE("adiabatic hold in the dark state transfers the population") {
  LambdaSystem sys = bare_system(two_pi * 4e6, two_pi * 7e6);
  sys.gamma_e = two_pi * 6e6;
  PulseSchedule slow = PulseSchedule::stirap_gaussian(40e-6);
  const auto samples = evolve(sys, slow, QuantumState::pure(Level::i),
                              {0.0, slow.sequence_duration()}, 2e-6);
  CHECK(samples.back().state.population(Level::g) >= 0.99);
}

TEST_CASE("halving the tolerance moves the answer by less than the tolerance") {
  LambdaSystem sys = bare_system(two_pi * 4e6, two_pi * 7e6);
  sys.gamma_e = two_pi * 6e6;
  PulseSchedule schedule = PulseSchedule::stirap_gaussian(4e-6);
  const double T = schedule.sequence_duration();

  EvolveOptions loose;
  loose.rtol = 1e-7;
  loose.atol = 1e-10;
  EvolveOptions tight;
  tight.rtol = 0.5e-7;
  tight.atol = 0.5e-10;
  const QuantumState a = evolve_final(sys, schedule, QuantumState::pure(Level::i),
                                      0.0, T, loose);
  const QuantumState b = evolve_final(sys, schedule, QuantumState::pure(Level::i),
                                      0.0, T, tight);
  CHECK(std::abs(a.population(Level::g) - b.population(Level::g)) < 1e-7);
}

TEST_CASE("integrator failure reports the offending time") {
  LambdaSystem sys = bare_system(two_pi * 4e6, 0.0);
  EvolveOptions impossible;
  impossible.rtol = 1e-16;  // below machine precision, cannot be met
  impossible.atol = 0.0;
  try {
    evolve_final(sys, PulseSchedule::square(1e-5), QuantumState::pure(Level::i), 0.0,
                 1e-5, impossible);
    FAIL("expected IntegratorError");
  } catch (const IntegratorError& e) {
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
    CHECK(e.t >= 0.0);
    CHECK(e.t <= 1e-5);
  }
}

TEST_CASE("evolve validates its inputs") {
  LambdaSystem sys;
  PulseSchedule square = PulseSchedule::square(1e-6);
  QuantumState bad;  // trace + lost = 0, not a physical state
  CHECK_THROWS_AS(evolve(sys, square, bad, {0.0, 1e-6}, 1e-7), std::invalid_argument);

  QuantumState good = QuantumState::pure(Level::i);
  CHECK_THROWS_AS(evolve(sys, square, good, {1e-6, 0.0}, 1e-7), std::invalid_argument);
  CHECK_THROWS_AS(evolve(sys, square, good, {0.0, 1e-6}, 0.0), std::invalid_argument);

  LambdaSystem negative;
  negative.gamma_e = -1.0;
  CHECK_THROWS_AS(evolve(negative, square, good, {0.0, 1e-6}, 1e-7),
                  std::invalid_argument);
}
