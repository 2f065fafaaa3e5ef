#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stirap_lab/rotor_stark.hpp"

using namespace stirap_lab;

namespace {

// Independent oracle for <N+1,m|cos(theta)|N,m>: Simpson quadrature over the
// normalized associated Legendre functions.
double cos_theta_element(int n, int m) {
  auto theta_fn = [](int l, int mm, double x) {
    const double norm = std::sqrt((2.0 * l + 1.0) / 2.0 *
                                  std::exp(std::lgamma(l - mm + 1.0) -
                                           std::lgamma(l + mm + 1.0)));
    return norm * std::assoc_legendre(l, mm, x);
  };
  const int steps = 4000;  // even
  double integral = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double theta = M_PI * k / steps;
    const double x = std::cos(theta);
    const double f =
        theta_fn(n + 1, m, x) * x * theta_fn(n, m, x) * std::sin(theta);
    const double weight = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += weight * f;
  }
  return integral * (M_PI / steps) / 3.0;
}

StarkModel singlet() {
  StarkModel model;
  model.b_rot = 1.1139e9;
  model.dipole = 0.566;
  return model;
}

StarkModel triplet() {
  StarkModel model;
  model.b_rot = 0.5264e9;
  model.dipole = 0.052;
  return model;
}

std::vector<double> field_grid(double max, int points) {
  std::vector<double> fields(points);
  for (int k = 0; k < points; ++k) fields[k] = max * k / (points - 1.0);
  return fields;
}

double branch_energy(const std::vector<StarkLevel>& levels, int n, int m,
                     std::size_t field_index) {
  for (const auto& level : levels)
    if (level.n_label == n && level.m_abs == m)
      return level.energies[field_index].second;
  FAIL("branch not found");
  return 0.0;
}

}  // namespace

TEST_CASE("rotational energies and 6B splittings") {
  CHECK(rotational_energy(0.5264e9, 2) == doctest::Approx(3.1584e9).epsilon(1e-12));
  CHECK(rotational_energy(1.1139e9, 2) == doctest::Approx(6.6834e9).epsilon(1e-12));
  // measured splitting 6.6836(5) GHz brackets the model value
  CHECK(std::abs(rotational_energy(1.1139e9, 2) - 6.6836e9) <= 0.5e6);
  CHECK(rotational_energy(0.7e9, 0) == 0.0);
  CHECK_THROWS_AS(rotational_energy(1e9, -1), std::invalid_argument);
}

TEST_CASE("stark_matrix") {
  SUBCASE("zero field is the diagonal rotor spectrum") {
    StarkModel model = singlet();
    const Eigen::MatrixXd h = stark_matrix(model, 0.0);
    CHECK(h.rows() == model.n_max + 1);
    for (int k = 0; k <= model.n_max; ++k)
      CHECK(h(k, k) == doctest::Approx(model.b_rot * k * (k + 1)));
    CHECK((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("couplings match the quadrature oracle") {
    StarkModel model = triplet();
    const double field = 2e5;
    for (int m : {0, 1, 2}) {
      model.m = m;
      const Eigen::MatrixXd h = stark_matrix(model, field);
      const double scale = debye_to_si(model.dipole) * field / constants.planck_h;
      for (int k = 0; k + 1 < h.rows(); ++k) {
        const int n = m + k;
        CHECK(h(k, k + 1) ==
              doctest::Approx(-scale * cos_theta_element(n, m)).epsilon(1e-8));
      }
    }
  }

  SUBCASE("the N=0 to N=1 element is -dE/(h sqrt(3))") {
    StarkModel model = singlet();
    const double field = 1e5;
    const Eigen::MatrixXd h = stark_matrix(model, field);
    const double expected =
        -debye_to_si(model.dipole) * field / constants.planck_h / std::sqrt(3.0);
    CHECK(h(0, 1) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("symmetric for random inputs") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      StarkModel model;
      model.b_rot = 0.1e9 + 2e9 * uni(rng);
      model.dipole = 2.0 * uni(rng);
      model.m = static_cast<int>(3 * uni(rng));
      const Eigen::MatrixXd h = stark_matrix(model, 3e5 * uni(rng));
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("trace is field independent (the coupling is traceless)") {
    StarkModel model = singlet();
    const double trace0 = stark_matrix(model, 0.0).trace();
    for (double field : {1e4, 1e5, 3e5})
      CHECK(stark_matrix(model, field).trace() == doctest::Approx(trace0));
  }

  SUBCASE("domain errors") {
    StarkModel model = singlet();
    CHECK_THROWS_AS(stark_matrix(model, -1.0), std::invalid_argument);
    model.m = model.n_max + 1;
    CHECK_THROWS_AS(stark_matrix(model, 1e5), std::invalid_argument);
    StarkModel small = singlet();
    small.n_max = 2;
    CHECK_THROWS_AS(stark_matrix(small, 1e5), std::invalid_argument);
  }
}

TEST_CASE("perturbative_shift") {
  SUBCASE("vanishes at zero field") {
    for (int n : {0, 1, 2})
      for (int m = 0; m <= n; ++m)
        CHECK(perturbative_shift(singlet(), 0.0, n, m).shift_hz == 0.0);
  }

  SUBCASE("N=2 sign and ratio pattern {6, 3, -6}") {
    const double field = 1e4;
    const double m0 = perturbative_shift(triplet(), field, 2, 0).shift_hz;
    const double m1 = perturbative_shift(triplet(), field, 2, 1).shift_hz;
    const double m2 = perturbative_shift(triplet(), field, 2, 2).shift_hz;
    CHECK(m0 > 0.0);
    CHECK(m1 > 0.0);
    CHECK(m2 < 0.0);
    CHECK(m1 == doctest::Approx(0.5 * m0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(-m0).epsilon(1e-12));
  }

  SUBCASE("reliability flag trips above 0.3 B") {
    StarkModel model = singlet();
    // d E / h = 0.57 GHz at 2 kV/cm, above 0.3 x 1.1139 GHz
    CHECK_FALSE(perturbative_shift(model, 2e5, 0, 0).reliable);
    CHECK(perturbative_shift(model, 2e4, 0, 0).reliable);
  }
}

TEST_CASE("stark_map") {
  SUBCASE("zero dipole leaves every branch flat") {
    StarkModel model = singlet();
    model.dipole = 0.0;
    const auto levels = stark_map(model, field_grid(2e5, 5), 2);
    for (const auto& level : levels)
      for (const auto& [field, energy] : level.energies)
        CHECK(energy == doctest::Approx(model.b_rot * level.n_label *
                                        (level.n_label + 1)));
  }

  SUBCASE("branch count, ordering and zero-field limits") {
    const auto levels = stark_map(singlet(), field_grid(2e5, 9), 2);
    REQUIRE(levels.size() == 6);  // (m,N) = (0,0),(0,1),(0,2),(1,1),(1,2),(2,2)
    CHECK(levels[0].m_abs == 0);
    CHECK(levels[0].n_label == 0);
    CHECK(levels[3].m_abs == 1);
    CHECK(levels[3].n_label == 1);
    CHECK(levels[5].m_abs == 2);
    CHECK(levels[5].n_label == 2);
    for (const auto& level : levels)
      CHECK(level.energies.front().second ==
            doctest::Approx(rotational_energy(1.1139e9, level.n_label)));
  }

  SUBCASE("matches the frozen diagonalization oracle") {
    const auto grid = field_grid(2e5, 41);
    const auto singlet_map = stark_map(singlet(), grid, 2);
    CHECK(branch_energy(singlet_map, 0, 0, 40) ==
          doctest::Approx(-47848837.4072).epsilon(1e-9));
    CHECK(branch_energy(singlet_map, 2, 0, 40) - 6.0 * 1.1139e9 ==
          doctest::Approx(6960212.5914).epsilon(1e-8));

    const auto triplet_map = stark_map(triplet(), grid, 2);
    CHECK(branch_energy(triplet_map, 0, 0, 40) ==
          doctest::Approx(-867515.52278).epsilon(1e-9));
    const double b6 = 6.0 * 0.5264e9;
    CHECK(branch_energy(triplet_map, 2, 0, 40) - b6 ==
          doctest::Approx(124017.48732).epsilon(1e-8));
    CHECK(branch_energy(triplet_map, 2, 1, 40) - b6 ==
          doctest::Approx(61985.70887).epsilon(1e-8));
    CHECK(branch_energy(triplet_map, 2, 2, 40) - b6 ==
          doctest::Approx(-124003.58049).epsilon(1e-8));
  }

  SUBCASE("N=0 branch decreases strictly with field for d > 0") {
    const auto levels = stark_map(singlet(), field_grid(2e5, 21), 0);
    const auto& branch = levels.front().energies;
    for (std::size_t k = 1; k < branch.size(); ++k)
      CHECK(branch[k].second < branch[k - 1].second);
  }

  SUBCASE("agrees with perturbation theory deep in the quadratic regime") {
    // d E / h = 0.01 B
    const double field =
        0.01 * singlet().b_rot * constants.planck_h / debye_to_si(singlet().dipole);
    const auto levels = stark_map(singlet(), {0.0, field}, 2);
    for (const auto& level : levels) {
      const double shift =
          level.energies[1].second - rotational_energy(1.1139e9, level.n_label);
      const double pert =
          perturbative_shift(singlet(), field, level.n_label, level.m_abs).shift_hz;
      CHECK(shift == doctest::Approx(pert).epsilon(1e-3));
    }
  }

  SUBCASE("quadratic onset: shift / E^2 converges to -(d/h)^2/(6B)") {
    const double expected =
        -std::pow(debye_to_si(singlet().dipole) / constants.planck_h, 2) /
        (6.0 * singlet().b_rot);
    double previous_error = 1e300;
    for (double field : {4e4, 2e4, 1e4}) {
      const auto levels = stark_map(singlet(), {0.0, field}, 0);
      const double ratio = levels.front().energies[1].second / (field * field);
      const double error = std::abs(ratio - expected);
      CHECK(error < previous_error);
      previous_error = error;
    }
    CHECK(previous_error < 1e-3 * std::abs(expected));
  }

  SUBCASE("truncation is converged: n_max 10 vs 14 below 1 Hz") {
    for (const StarkModel& base : {singlet(), triplet()}) {
      StarkModel a = base, b = base;
      a.n_max = 10;
      b.n_max = 14;
      const auto grid = field_grid(2e5, 5);
      const auto la = stark_map(a, grid, 2);
      const auto lb = stark_map(b, grid, 2);
      REQUIRE(la.size() == lb.size());
      for (std::size_t j = 0; j < la.size(); ++j)
        for (std::size_t f = 0; f < grid.size(); ++f)
          CHECK(std::abs(la[j].energies[f].second - lb[j].energies[f].second) <
                1.0);
    }
  }

  SUBCASE("branch energies are continuous in the field") {
    const auto levels = stark_map(singlet(), field_grid(2e5, 81), 2);
    for (const auto& level : levels) {
      const auto& e = level.energies;
      // every jump is bounded by its neighbours: a branch-label glitch
      // would show up as an isolated MHz-scale step
      for (std::size_t k = 1; k + 1 < e.size(); ++k) {
        const double before = std::abs(e[k].second - e[k - 1].second);
        const double after = std::abs(e[k + 1].second - e[k].second);
        CHECK(before <= 3.0 * after + 1e3);
        CHECK(after <= 3.0 * before + 1e3);
      }
    }
  }

  SUBCASE("ambiguous continuation on a hopelessly coarse grid is an error") {
    StarkModel model;
    model.b_rot = 1e6;   // tiny B
    model.dipole = 10.0; // huge dipole: eigenvectors rotate completely
    CHECK_THROWS_AS(stark_map(model, {0.0, 1e6}, 2), ContinuationError);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(stark_map(singlet(), {0.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(stark_map(singlet(), {1e4, 2e4}, 2), std::invalid_argument);
    CHECK_THROWS_AS(stark_map(singlet(), {0.0, 2e4, 1e4}, 2), std::invalid_argument);
    CHECK_THROWS_AS(stark_map(singlet(), {0.0, 1e4}, 99), std::invalid_argument);
  }
}
