#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stirap_lab/constants.hpp"
#include "stirap_lab/units.hpp"

namespace stirap_lab {

/// Rigid rotor with a permanent dipole in a DC electric field.
/// Energies are reported in Hz (E/h) relative to the zero-field N = 0 level.
struct StarkModel {
  double b_rot = 0.0;    // rotational constant B, Hz
  double dipole = 0.0;   // permanent dipole, Debye
  int n_max = 10;        // basis truncation in N
  int m = 0;             // conserved projection m_N

  void validate() const {
    if (!(b_rot > 0.0)) throw std::invalid_argument("b_rot must be > 0");
    if (!(dipole >= 0.0)) throw std::invalid_argument("dipole must be >= 0");
    if (n_max < 3) throw std::invalid_argument("n_max must be >= 3");
    if (std::abs(m) > n_max) throw std::invalid_argument("|m| must be <= n_max");
  }
};

/// One adiabatically tracked eigenbranch of the Stark map.
struct StarkLevel {
  int n_label = 0;  // zero-field N this branch connects to
  int m_abs = 0;
  std::vector<std::pair<double, double>> energies;  // (field V/m, energy Hz)
};

struct ContinuationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// B N(N+1), Hz.
template <typename Scalar = double>
Scalar rotational_energy(Scalar b_rot, int n) {
  if (n < 0) throw std::invalid_argument("rotational quantum number must be >= 0");
  return b_rot * Scalar(n) * Scalar(n + 1);
}

/// <N+1, m| cos(theta) |N, m> for the rigid rotor.
template <typename Scalar = double>
Scalar stark_coupling_coefficient(int n, int m) {
  const Scalar num = Scalar((n + 1) * (n + 1) - m * m);
  const Scalar den = Scalar((2 * n + 1) * (2 * n + 3));
  return std::sqrt(num / den);
}

/// Stark Hamiltonian at fixed m in the |N, m> basis, N = |m| .. n_max, in
/// Hz: diagonal B N(N+1), off-diagonal -d E/h <N+1,m|cos(theta)|N,m>.
/// Real symmetric tridiagonal.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> stark_matrix(
    const StarkModel& model, double field) {
  model.validate();
  if (!(field >= 0.0)) throw std::invalid_argument("field must be >= 0");

  const int m_abs = std::abs(model.m);
  const int dim = model.n_max - m_abs + 1;
  const Scalar coupling =
      Scalar(-debye_to_si(model.dipole) * field / constants.planck_h);

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const int n = m_abs + k;
    h(k, k) = rotational_energy(Scalar(model.b_rot), n);
    if (k + 1 < dim) {
      const Scalar off = coupling * stark_coupling_coefficient<Scalar>(n, m_abs);
      h(k, k + 1) = off;
      h(k + 1, k) = off;
    }
  }
  return h;
}

struct PerturbativeShift {
  double shift_hz = 0.0;
  bool reliable = true;  // false once d E/h exceeds 0.3 B
};

/// Second-order Stark shift of |N, m>: -(dE/h)^2/(6B) for N = 0, otherwise
/// (dE/h)^2/(2B) (N(N+1) - 3m^2) / (N(N+1)(2N-1)(2N+3)).
inline PerturbativeShift perturbative_shift(const StarkModel& model, double field,
                                            int n, int m) {
  model.validate();
  if (!(field >= 0.0)) throw std::invalid_argument("field must be >= 0");
  if (n < 0) throw std::invalid_argument("N must be >= 0");
  if (std::abs(m) > n) throw std::invalid_argument("|m| must be <= N");

  const double de_h = debye_to_si(model.dipole) * field / constants.planck_h;
  PerturbativeShift result;
  result.reliable = de_h <= 0.3 * model.b_rot;
  if (n == 0) {
    result.shift_hz = -de_h * de_h / (6.0 * model.b_rot);
  } else {
    const double nn = double(n) * double(n + 1);
    result.shift_hz = de_h * de_h / (2.0 * model.b_rot) * (nn - 3.0 * m * m) /
                      (nn * (2.0 * n - 1.0) * (2.0 * n + 3.0));
  }
  return result;
}

namespace detail {

template <typename Scalar>
std::vector<Eigen::VectorXd> tracked_branches(const StarkModel& model,
                                              const std::vector<double>& fields,
                                              int m_abs, int n_report) {
  StarkModel fixed = model;
  fixed.m = m_abs;
  const int dim = fixed.n_max - m_abs + 1;
  const int branches = n_report - m_abs + 1;

  std::vector<Eigen::VectorXd> energies(branches);
  for (auto& e : energies) e.resize(static_cast<int>(fields.size()));

  // zero-field eigenvectors are the basis vectors themselves
  Eigen::MatrixXd previous = Eigen::MatrixXd::Identity(dim, branches);
  for (int b = 0; b < branches; ++b)
    energies[b][0] = rotational_energy(model.b_rot, m_abs + b);

  for (std::size_t f = 1; f < fields.size(); ++f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        stark_matrix<double>(fixed, fields[f]));
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("stark_map: eigensolver failed");
    const Eigen::MatrixXd& vectors = solver.eigenvectors();

    std::vector<bool> used(dim, false);
    for (int b = 0; b < branches; ++b) {
      const Eigen::VectorXd overlaps =
          (vectors.transpose() * previous.col(b)).cwiseAbs();
      int best = -1;
      for (int k = 0; k < dim; ++k)
        if (!used[k] && (best < 0 || overlaps[k] > overlaps[best])) best = k;
      if (overlaps[best] < 0.5)
        throw ContinuationError(
            "stark_map: ambiguous adiabatic continuation between fields " +
            std::to_string(fields[f - 1]) + " and " + std::to_string(fields[f]) +
            " V/m; use a finer field grid");
      used[best] = true;
      energies[b][static_cast<int>(f)] = solver.eigenvalues()[best];
      previous.col(b) = vectors.col(best);
    }
  }
  return energies;
}

}  // namespace detail

/// Stark map of all branches with zero-field N <= n_report and |m| <= N,
/// tracked adiabatically in the field by maximal eigenvector overlap.
/// The basis is grown automatically until the reported energies are
/// converged to convergence_tol_hz at the largest field.
inline std::vector<StarkLevel> stark_map(const StarkModel& model,
                                         const std::vector<double>& fields,
                                         int n_report = 2,
                                         double convergence_tol_hz = 1.0) {
  model.validate();
  if (fields.size() < 2) throw std::invalid_argument("need at least two fields");
  if (fields.front() != 0.0)
    throw std::invalid_argument("fields must start at 0");
  for (std::size_t k = 1; k < fields.size(); ++k)
    if (!(fields[k] > fields[k - 1]))
      throw std::invalid_argument("fields must be sorted strictly ascending");
  if (n_report < 0 || n_report > model.n_max)
    throw std::invalid_argument("n_report must be in [0, n_max]");

  StarkModel working = model;
  std::vector<StarkLevel> levels;
  constexpr int n_max_cap = 64;
  while (true) {
    levels.clear();
    StarkModel larger = working;
    larger.n_max = working.n_max + 4;
    bool converged = true;
    for (int m_abs = 0; m_abs <= n_report && converged; ++m_abs) {
      const auto branch = detail::tracked_branches<double>(working, fields, m_abs, n_report);
      const auto check = detail::tracked_branches<double>(larger, fields, m_abs, n_report);
      for (std::size_t b = 0; b < branch.size(); ++b) {
        if ((branch[b] - check[b]).cwiseAbs().maxCoeff() > convergence_tol_hz) {
          converged = false;
          break;
        }
        StarkLevel level;
        level.n_label = m_abs + static_cast<int>(b);
        level.m_abs = m_abs;
        for (std::size_t f = 0; f < fields.size(); ++f)
          level.energies.emplace_back(fields[f], branch[b][static_cast<int>(f)]);
        levels.push_back(std::move(level));
      }
    }
    if (converged) break;
    working.n_max += 4;
    if (working.n_max > n_max_cap)
      throw std::runtime_error("stark_map: basis did not converge by n_max = " +
                               std::to_string(n_max_cap));
  }

  // deterministic ordering by (|m|, N); branches of one m are already in N order
  std::sort(levels.begin(), levels.end(), [](const StarkLevel& a, const StarkLevel& b) {
    return a.m_abs != b.m_abs ? a.m_abs < b.m_abs : a.n_label < b.n_label;
  });
  return levels;
}

}  // namespace stirap_lab
