#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace stirap_lab {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LeastSquaresOptions {
  int max_iterations = 200;
  double gradient_tol_rel = 1e-10;  // stop when |g| falls below this times |g0|
  double step_tol = 1e-12;          // relative parameter step considered stalled
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // (J^T J)^-1 at the optimum, unscaled
  double chi2 = 0.0;           // sum of squared residuals at the optimum
  int n_residuals = 0;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd gradient;  // J^T r at the optimum
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Forward-difference Jacobian of the residual vector.
inline Eigen::MatrixXd numerical_jacobian(const ResidualFn& residuals,
                                          const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& r0) {
  const double sqrt_eps = std::sqrt(2.220446049250313e-16);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = sqrt_eps * (std::abs(x[j]) + sqrt_eps);
    Eigen::VectorXd xp = x;
    xp[j] += h;
    jac.col(j) = (residuals(xp) - r0) / h;
  }
  return jac;
}

/// Damped least squares (Levenberg-Marquardt).  The cost is monotonically
/// non-increasing across iterations; `converged` means the gradient norm
/// dropped below gradient_tol_rel relative to its starting value (or the
/// residuals vanished).
inline LeastSquaresResult fit_least_squares(const ResidualFn& residuals,
                                            const Eigen::VectorXd& x0,
                                            const LeastSquaresOptions& opts = {}) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residuals(x);
  if (r.size() <= x.size())
    throw FitError("least squares needs more residuals than parameters");
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  LeastSquaresResult result;
  result.n_residuals = static_cast<int>(r.size());

  Eigen::MatrixXd jac = numerical_jacobian(residuals, x, r);
  Eigen::VectorXd grad = jac.transpose() * r;
  const double grad0 = std::max(grad.cwiseAbs().maxCoeff(), 1e-300);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (grad.cwiseAbs().maxCoeff() <= opts.gradient_tol_rel * grad0 ||
        cost <= 1e-30) {
      result.converged = true;
      break;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-32);
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      const Eigen::VectorXd x_new = x + step;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new <= cost) {
        const double step_scale = step.cwiseAbs().maxCoeff();
        const double x_scale = x.cwiseAbs().maxCoeff() + opts.step_tol;
        x = x_new;
        r = r_new;
        const bool stalled =
            step_scale <= opts.step_tol * x_scale && cost_new >= cost * (1.0 - 1e-14);
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-14);
        jac = numerical_jacobian(residuals, x, r);
        grad = jac.transpose() * r;
        stepped = true;
        if (stalled) {
          result.converged =
              grad.cwiseAbs().maxCoeff() <= opts.gradient_tol_rel * grad0 || cost <= 1e-30;
          iter = opts.max_iterations;  // stop outer loop
        }
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }
    if (!stepped) break;  // no descent direction at machine damping
  }

  // final convergence re-check (covers max_iterations exits at a solution)
  if (!result.converged)
    result.converged =
        grad.cwiseAbs().maxCoeff() <= opts.gradient_tol_rel * grad0 || cost <= 1e-30;

  result.params = x;
  result.chi2 = cost;
  result.gradient = grad;
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  result.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return result;
}

}  // namespace stirap_lab
