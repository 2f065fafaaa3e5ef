#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stirap_lab {

/// Raised when the adaptive stepper cannot meet the requested tolerance.
struct IntegratorError : std::runtime_error {
  double t;
  explicit IntegratorError(const std::string& what, double time)
      : std::runtime_error(what + " at t = " + std::to_string(time) + " s"), t(time) {}
};

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double max_step = 0.0;  // 0 = unrestricted
  long max_steps = 200'000'000;
};

/// Embedded Dormand-Prince 5(4) stepper with FSAL.  `State` is any Eigen
/// fixed-size vector type with complex or real scalars; `rhs(t, y)` returns
/// the derivative, `observer(t, y)` is called after every accepted step
/// (including the initial point).
template <typename State, typename Rhs, typename Observer>
void integrate_adaptive(Rhs&& rhs, State& y, double t0, double t1,
                        const OdeOptions& opts, Observer&& observer) {
  if (!(t1 >= t0)) throw std::invalid_argument("time span must be ordered");
  const double span = t1 - t0;
  if (span == 0.0) {
    observer(t0, y);
    return;
  }

  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                   e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                   e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  double t = t0;
  double h = std::min(span, span * 1e-3);
  if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
  const double hmin = span * 1e-14;

  State k1 = rhs(t, y);
  observer(t, y);

  long steps = 0;
  while (t < t1) {
    if (++steps > opts.max_steps)
      throw IntegratorError("integrator exceeded the step budget", t);
    h = std::min(h, t1 - t);

    const State k2 = rhs(t + c2 * h, (y + h * (a21 * k1)).eval());
    const State k3 = rhs(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
    const State k4 = rhs(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
    const State k5 = rhs(t + c5 * h,
                         (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const State k6 = rhs(
        t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    const State ynew =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = rhs(t + h, ynew);
    const State err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    // RMS of the component-wise error against the mixed tolerance.
    double sum = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double scale =
          opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double q = std::abs(err[i]) / scale;
      sum += q * q;
    }
    const double err_norm = std::sqrt(sum / static_cast<double>(y.size()));

    if (err_norm <= 1.0) {
      t += h;
      y = ynew;
      k1 = k7;  // FSAL
      observer(t, y);
      double factor = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      h *= std::clamp(factor, 0.2, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
    }
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    if (h < hmin && t < t1)
      throw IntegratorError("step size underflow (tolerance not attainable)", t);
  }
}

}  // namespace stirap_lab
