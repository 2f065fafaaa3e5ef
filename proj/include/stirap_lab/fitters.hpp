#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stirap_lab/constants.hpp"
#include "stirap_lab/dark_resonance.hpp"
#include "stirap_lab/least_squares.hpp"
#include "stirap_lab/rotor_stark.hpp"
#include "stirap_lab/units.hpp"

namespace stirap_lab {

enum class AxisKind { field, time, detuning };

/// A measured scan.  x must be strictly increasing; detuning axes are in
/// Hz, fields in V/m, times in s.
struct ScanData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma_y;  // empty, or one per point
  AxisKind axis = AxisKind::detuning;

  void validate() const {
    if (x.size() < 3) throw std::invalid_argument("scan needs at least 3 points");
    if (y.size() != x.size()) throw std::invalid_argument("x/y size mismatch");
    if (!sigma_y.empty() && sigma_y.size() != x.size())
      throw std::invalid_argument("sigma_y size mismatch");
    for (std::size_t k = 1; k < x.size(); ++k)
      if (!(x[k] > x[k - 1]))
        throw std::invalid_argument("x must be strictly increasing");
    for (double s : sigma_y)
      if (!(s > 0.0)) throw std::invalid_argument("sigma_y must be positive");
  }
};

struct FitResult {
  double value = 0.0;
  double stat_err = 0.0;
  std::optional<double> sys_err;
  double chi2_reduced = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline Eigen::VectorXd weighted_residuals(const ScanData& data,
                                          const std::vector<double>& model) {
  Eigen::VectorXd r(static_cast<int>(data.x.size()));
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    const double w = data.sigma_y.empty() ? 1.0 : 1.0 / data.sigma_y[k];
    r[static_cast<int>(k)] = (data.y[k] - model[k]) * w;
  }
  return r;
}

/// 1-sigma errors from the linearized covariance, scaled by the reduced
/// chi-square when no measurement uncertainties were supplied.
inline double scaled_error(const LeastSquaresResult& fit, int param,
                           bool have_sigmas, double chi2_reduced) {
  double var = fit.covariance(param, param);
  if (var < 0.0) var = 0.0;
  if (!have_sigmas) var *= chi2_reduced;
  return std::sqrt(var);
}

}  // namespace detail

struct FitDipoleOptions {
  double field_sys_frac = 0.0;  // fractional field-calibration uncertainty
  int n_max = 10;
  double chi2_gate = 10.0;  // flag threshold for model mismatch
};

/// Shifts of one Stark branch (zero-field label n, projection m) at the
/// given fields, relative to that branch's zero-field energy.  Model
/// backend shared by fit_dipole and the CLI.
inline std::vector<double> stark_branch_shifts(double b_rot, double dipole_debye,
                                               int n, int m,
                                               const std::vector<double>& fields,
                                               int n_max = 10) {
  StarkModel model;
  model.b_rot = b_rot;
  model.dipole = dipole_debye;
  model.n_max = std::max(n_max, n + 4);
  std::vector<double> grid;
  grid.reserve(fields.size() + 1);
  grid.push_back(0.0);
  for (double f : fields)
    if (f > grid.back()) grid.push_back(f);
  const auto levels = stark_map(model, grid, std::max(n, std::abs(m)));
  const StarkLevel* branch = nullptr;
  for (const auto& level : levels)
    if (level.n_label == n && level.m_abs == std::abs(m)) branch = &level;
  if (!branch) throw FitError("requested Stark branch not in map");

  const double e0 = rotational_energy(b_rot, n);
  std::vector<double> shifts;
  shifts.reserve(fields.size());
  for (double f : fields) {
    double value = 0.0;
    for (const auto& [field, energy] : branch->energies)
      if (field == f) value = energy - e0;
    shifts.push_back(value);
  }
  return shifts;
}

/// Fit the permanent dipole moment (Debye) to measured Stark shifts of one
/// branch, holding the rotational constant fixed.  A declared fractional
/// field-calibration uncertainty propagates into sys_err by refitting with
/// all fields rescaled.
inline FitResult fit_dipole(const ScanData& data, double b_rot, int n, int m,
                            const FitDipoleOptions& opts = {}) {
  data.validate();
  if (data.axis != AxisKind::field)
    throw std::invalid_argument("fit_dipole expects a field axis");
  if (!(b_rot > 0.0)) throw std::invalid_argument("b_rot must be > 0");
  for (double f : data.x)
    if (!(f >= 0.0)) throw std::invalid_argument("fields must be >= 0");

  auto solve = [&](const std::vector<double>& fields) {
    auto residual_fn = [&](const Eigen::VectorXd& p) {
      const auto model =
          stark_branch_shifts(b_rot, std::abs(p[0]), n, m, fields, opts.n_max);
      return detail::weighted_residuals(data, model);
    };
    // seed from the second-order shift at the largest field
    double d0 = 1e-4;
    StarkModel probe;
    probe.b_rot = b_rot;
    probe.dipole = 1.0;
    probe.n_max = opts.n_max;
    const double unit_shift =
        perturbative_shift(probe, fields.back(), n, std::abs(m)).shift_hz;
    if (std::abs(unit_shift) > 0.0 && std::abs(data.y.back()) > 0.0)
      d0 = std::sqrt(std::abs(data.y.back() / unit_shift));
    Eigen::VectorXd x0(1);
    x0[0] = std::max(d0, 1e-4);
    return fit_least_squares(residual_fn, x0);
  };

  const auto fit = solve(data.x);
  const int dof = std::max(fit.n_residuals - 1, 1);
  FitResult result;
  result.value = std::abs(fit.params[0]);
  result.chi2_reduced = fit.chi2 / dof;
  result.converged = fit.converged;
  result.stat_err = detail::scaled_error(fit, 0, !data.sigma_y.empty(),
                                         result.chi2_reduced);
  if (!fit.converged) result.warnings.push_back("fit did not converge");
  if (result.chi2_reduced > opts.chi2_gate)
    result.warnings.push_back("chi2_reduced above gate: data inconsistent with the rotor model");

  if (opts.field_sys_frac > 0.0) {
    auto rescaled = [&](double factor) {
      std::vector<double> fields = data.x;
      for (double& f : fields) f *= factor;
      return std::abs(solve(fields).params[0]);
    };
    const double up = rescaled(1.0 + opts.field_sys_frac);
    const double down = rescaled(1.0 - opts.field_sys_frac);
    result.sys_err =
        0.5 * (std::abs(up - result.value) + std::abs(down - result.value));
  }
  return result;
}

/// Fit N(t) = N0 exp(-t/tau); returns tau.  Throws FitError when the data
/// does not support a decaying exponential.
inline FitResult fit_lifetime(const ScanData& data) {
  data.validate();
  if (data.axis != AxisKind::time)
    throw std::invalid_argument("fit_lifetime expects a time axis");
  for (double v : data.y)
    if (!(v >= 0.0)) throw std::invalid_argument("counts must be >= 0");

  const double span = data.x.back() - data.x.front();
  // log-linear seed over the positive counts
  double n0 = *std::max_element(data.y.begin(), data.y.end());
  double tau0 = span;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < data.x.size(); ++k) {
      if (data.y[k] <= 0.0) continue;
      const double lx = data.x[k], ly = std::log(data.y[k]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
    if (n >= 2) {
      const double denom = n * sxx - sx * sx;
      if (denom > 0.0) {
        const double slope = (n * sxy - sx * sy) / denom;
        if (slope < 0.0) tau0 = -1.0 / slope;
      }
    }
  }
  if (n0 <= 0.0) throw FitError("lifetime fit: all counts are zero");

  auto residual_fn = [&](const Eigen::VectorXd& p) {
    std::vector<double> model(data.x.size());
    for (std::size_t k = 0; k < data.x.size(); ++k)
      model[k] = p[0] * std::exp(-data.x[k] / p[1]);
    return detail::weighted_residuals(data, model);
  };
  Eigen::VectorXd x0(2);
  x0 << n0, tau0;
  const auto fit = fit_least_squares(residual_fn, x0);

  const double tau = fit.params[1];
  if (!fit.converged || !(tau > 0.0) || tau > 100.0 * span)
    throw FitError("lifetime fit did not converge to a decaying exponential");

  const int dof = std::max(fit.n_residuals - 2, 1);
  FitResult result;
  result.value = tau;
  result.chi2_reduced = fit.chi2 / dof;
  result.converged = true;
  result.stat_err =
      detail::scaled_error(fit, 1, !data.sigma_y.empty(), result.chi2_reduced);
  return result;
}

struct Resonance {
  double center = 0.0;  // scan axis units (Hz for detuning scans)
  double height = 0.0;  // peak amplitude above the local offset
  double width = 0.0;   // FWHM, scan axis units
};

struct FindResonancesOptions {
  double prominence_frac = 0.2;  // of the full data range
};

/// Local maxima above a prominence floor, each refined by a symmetric
/// Lorentzian fit over the surrounding window.  Flat data yields an empty
/// list.  Ties between equal samples resolve toward lower frequency.
inline std::vector<Resonance> find_resonances(const ScanData& data,
                                              const FindResonancesOptions& opts = {}) {
  data.validate();
  const std::size_t n = data.x.size();
  const double lo = *std::min_element(data.y.begin(), data.y.end());
  const double hi = *std::max_element(data.y.begin(), data.y.end());
  const double range = hi - lo;
  std::vector<Resonance> found;
  if (range <= 0.0) return found;
  const double threshold = lo + opts.prominence_frac * range;

  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (data.y[k] < threshold) continue;
    if (!(data.y[k] > data.y[k - 1] && data.y[k] >= data.y[k + 1])) continue;

    // window: walk down until the half level or a rising flank
    const double half = lo + 0.5 * (data.y[k] - lo);
    std::size_t left = k, right = k;
    while (left > 0 && data.y[left - 1] <= data.y[left] && data.y[left] > half) --left;
    while (right + 1 < n && data.y[right + 1] <= data.y[right] && data.y[right] > half)
      ++right;
    while (right - left + 1 < 5) {  // minimum support for the 4-parameter fit
      if (left > 0) --left;
      if (right + 1 < n) ++right;
      if (left == 0 && right == n - 1) break;
    }

    auto residual_fn = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd r(static_cast<int>(right - left + 1));
      for (std::size_t j = left; j <= right; ++j) {
        const double u = (data.x[j] - p[0]) / (0.5 * p[2]);
        const double model = p[3] + p[1] / (1.0 + u * u);
        r[static_cast<int>(j - left)] = data.y[j] - model;
      }
      return r;
    };
    Eigen::VectorXd x0(4);
    const double guess_width =
        std::max(data.x[right] - data.x[left], data.x[k] - data.x[k - 1]) / 2.0;
    x0 << data.x[k], data.y[k] - lo, guess_width, lo;
    try {
      const auto fit = fit_least_squares(residual_fn, x0);
      found.push_back({fit.params[0], fit.params[1], std::abs(fit.params[2])});
    } catch (const FitError&) {
      found.push_back({data.x[k], data.y[k] - lo, guess_width});
    }
  }
  std::sort(found.begin(), found.end(),
            [](const Resonance& a, const Resonance& b) { return a.center < b.center; });
  return found;
}

struct FitDarkResonanceOptions {
  double pulse_duration = 0.0;  // required: square-pulse length of the model
  bool fit_gamma_e = false;
  double omega2_init = 0.0;  // rad/s; 0 derives a seed from the peak width
  EvolveOptions evolve;       // forward-model integration tolerances
};

/// Fit the square-pulse dark-resonance forward model to a two-photon scan
/// (x in Hz) and extract the pump Rabi frequency omega2 (rad/s).  The
/// probe Rabi frequency and gamma_e are taken from sys_partial; an overall
/// amplitude and the window center are nuisance parameters, so imaging
/// gain drops out.
inline FitResult fit_dark_resonance(const ScanData& data,
                                    const LambdaSystem& sys_partial,
                                    const FitDarkResonanceOptions& opts) {
  data.validate();
  if (data.axis != AxisKind::detuning)
    throw std::invalid_argument("fit_dark_resonance expects a detuning axis");
  if (!(opts.pulse_duration > 0.0))
    throw std::invalid_argument("pulse_duration must be > 0");

  const auto peaks = find_resonances(data);
  if (peaks.empty())
    throw FitError("fit_dark_resonance: no transparency window in the data");
  const Resonance& window = peaks.front();

  const bool free_gamma = opts.fit_gamma_e;
  auto model_scan = [&](double omega2, double center_hz, double gamma_e) {
    LambdaSystem sys = sys_partial;
    sys.omega2_peak = std::abs(omega2);
    sys.gamma_e = std::abs(gamma_e);
    std::vector<double> detunings;
    detunings.reserve(data.x.size());
    for (double x : data.x) detunings.push_back(two_pi * (x - center_hz));
    return dark_resonance_scan(sys, opts.pulse_duration, detunings,
                               ScanAxis::two_photon, opts.evolve);
  };

  auto residual_fn = [&](const Eigen::VectorXd& p) {
    const double gamma_e = free_gamma ? p[3] : sys_partial.gamma_e;
    const auto scan = model_scan(p[0], p[1], gamma_e);
    std::vector<double> model(scan.size());
    for (std::size_t k = 0; k < scan.size(); ++k) model[k] = p[2] * scan[k].remaining;
    return detail::weighted_residuals(data, model);
  };

  double omega2_seed = opts.omega2_init;
  if (omega2_seed <= 0.0) {
    // EIT window FWHM ~ omega2^2 / gamma_e
    omega2_seed =
        std::sqrt(std::max(two_pi * window.width * sys_partial.gamma_e, 1.0));
  }
  Eigen::VectorXd x0(free_gamma ? 4 : 3);
  x0[0] = omega2_seed;
  x0[1] = window.center;
  x0[2] = std::max(window.height, 0.1);
  if (free_gamma) x0[3] = sys_partial.gamma_e;

  const auto fit = fit_least_squares(residual_fn, x0);
  const int dof = std::max(fit.n_residuals - static_cast<int>(x0.size()), 1);

  FitResult result;
  result.value = std::abs(fit.params[0]);
  result.chi2_reduced = fit.chi2 / dof;
  result.converged = fit.converged;
  result.stat_err =
      detail::scaled_error(fit, 0, !data.sigma_y.empty(), result.chi2_reduced);
  if (!fit.converged) result.warnings.push_back("fit did not converge");
  if (free_gamma) {
    const double denom =
        std::sqrt(fit.covariance(0, 0) * fit.covariance(3, 3));
    if (denom > 0.0 && std::abs(fit.covariance(0, 3)) / denom > 0.99)
      result.warnings.push_back("omega2 degenerate with gamma_e (correlation > 0.99)");
  }
  return result;
}

/// Stark shift of the final state from the dark-resonance centers with and
/// without the field; negative means the level moved down.
inline double stark_shift_from_dark_resonance(double center_at_field,
                                              double center_at_zero) {
  return center_at_field - center_at_zero;
}

}  // namespace stirap_lab
