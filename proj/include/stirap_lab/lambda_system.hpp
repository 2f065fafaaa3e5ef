#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace stirap_lab {

/// Basis ordering used throughout: |i> (initial), |e> (excited), |g> (final).
enum class Level : int { i = 0, e = 1, g = 2 };

/// Three-level Lambda system driven by two laser fields.  omega1 couples
/// |i>-|e> (up leg), omega2 couples |e>-|g> (down leg).  All angular
/// quantities in rad/s; gamma_g is a plain population loss rate in 1/s.
///
/// Sign convention: delta_one_photon > 0 means the up-leg laser is tuned
/// below the |e> resonance; delta_two_photon > 0 means the laser frequency
/// difference is below the |i>-|g> splitting.
struct LambdaSystem {
  double omega1_peak = 0.0;       // up-leg peak Rabi frequency
  double omega2_peak = 0.0;       // down-leg peak Rabi frequency
  double delta_one_photon = 0.0;  // Delta, detuning from |e>
  double delta_two_photon = 0.0;  // delta, Raman detuning
  double gamma_e = 0.0;           // decay of |e> out of the system
  double gamma_g = 0.0;           // loss of |g> (1/lifetime)
  double laser_dephasing = 0.0;   // decay of the |i><g| coherence

  void validate() const {
    if (!(omega1_peak >= 0.0)) throw std::invalid_argument("omega1_peak must be >= 0");
    if (!(omega2_peak >= 0.0)) throw std::invalid_argument("omega2_peak must be >= 0");
    if (!(gamma_e >= 0.0)) throw std::invalid_argument("gamma_e must be >= 0");
    if (!(gamma_g >= 0.0)) throw std::invalid_argument("gamma_g must be >= 0");
    if (!(laser_dephasing >= 0.0))
      throw std::invalid_argument("laser_dephasing must be >= 0");
    if (!std::isfinite(delta_one_photon) || !std::isfinite(delta_two_photon))
      throw std::invalid_argument("detunings must be finite");
  }
};

enum class PulseShape { gaussian, sine_squared, constant };

/// Timing of one Raman pulse pair.  For the forward (reversed = false)
/// sequence the down-leg envelope peaks first, the up-leg follows after
/// `delay` -- the counterintuitive STIRAP order.  Gaussian envelopes are
/// truncated at +-4 sigma and rescaled so they stay continuous at the
/// support edges; sine-squared envelopes occupy [0, duration] shifted by
/// the delay; constant envelopes are flat over [0, duration] (delay is
/// ignored, used for square spectroscopy pulses).
struct PulseSchedule {
  PulseShape shape = PulseShape::gaussian;
  double duration = 0.0;  // per pulse, full width (s)
  double delay = 0.0;     // down-leg peak precedes up-leg peak by this (s)
  double hold = 0.0;      // dark interval between forward and reverse (s)
  bool reversed = false;  // reverse ordering for the return transfer

  /// Gaussian sigma; 0 means the default duration/6.
  double sigma = 0.0;

  /// Gaussian STIRAP pair with the default sigma = duration/6 and
  /// delay = 1.5 sigma.
  static PulseSchedule stirap_gaussian(double duration, double hold = 0.0) {
    PulseSchedule s;
    s.shape = PulseShape::gaussian;
    s.duration = duration;
    s.sigma = duration / 6.0;
    s.delay = 1.5 * s.sigma;
    s.hold = hold;
    return s;
  }

  /// Square pulse with both envelopes flat over [0, duration].
  static PulseSchedule square(double duration) {
    PulseSchedule s;
    s.shape = PulseShape::constant;
    s.duration = duration;
    return s;
  }

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("pulse duration must be > 0");
    if (!(delay >= 0.0)) throw std::invalid_argument("pulse delay must be >= 0");
    if (!(hold >= 0.0)) throw std::invalid_argument("hold must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  }

  double effective_sigma() const { return sigma > 0.0 ? sigma : duration / 6.0; }

  /// End of the envelope support; the sequence starts at t = 0.
  double sequence_duration() const {
    switch (shape) {
      case PulseShape::gaussian:
        return 8.0 * effective_sigma() + delay;
      case PulseShape::sine_squared:
        return duration + delay;
      case PulseShape::constant:
        return duration;
    }
    return duration;
  }

  /// Envelope of the pulse peaking early (down leg when not reversed).
  double early_envelope(double t) const { return envelope_at(t, 0.0); }

  /// Envelope of the pulse peaking late (up leg when not reversed).
  double late_envelope(double t) const {
    return shape == PulseShape::constant ? envelope_at(t, 0.0) : envelope_at(t, delay);
  }

  double omega1_envelope(double t) const {
    return reversed ? early_envelope(t) : late_envelope(t);
  }

  double omega2_envelope(double t) const {
    return reversed ? late_envelope(t) : early_envelope(t);
  }

  PulseSchedule reversed_copy() const {
    PulseSchedule s = *this;
    s.reversed = !reversed;
    return s;
  }

 private:
  double envelope_at(double t, double offset) const {
    switch (shape) {
      case PulseShape::gaussian: {
        const double sig = effective_sigma();
        const double peak = 4.0 * sig + offset;
        if (std::abs(t - peak) > 4.0 * sig) return 0.0;
        const double edge = std::exp(-8.0);
        const double u = (t - peak) / sig;
        return std::max((std::exp(-0.5 * u * u) - edge) / (1.0 - edge), 0.0);
      }
      case PulseShape::sine_squared: {
        if (t < offset || t > offset + duration) return 0.0;
        const double s = std::sin(M_PI * (t - offset) / duration);
        return s * s;
      }
      case PulseShape::constant:
        return (t >= 0.0 && t <= duration) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

/// Density matrix of the Lambda system plus the population that has
/// decayed out of it.  trace(rho) + lost = 1 for a physical state.
struct QuantumState {
  Eigen::Matrix3cd rho = Eigen::Matrix3cd::Zero();
  double lost = 0.0;

  static QuantumState pure(Level level) {
    QuantumState s;
    s.rho(static_cast<int>(level), static_cast<int>(level)) = 1.0;
    return s;
  }

  double population(Level level) const {
    return rho(static_cast<int>(level), static_cast<int>(level)).real();
  }

  double trace() const { return rho.trace().real(); }

  double hermiticity_defect() const {
    return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(rho);
    return solver.eigenvalues().minCoeff();
  }

  bool is_physical(double trace_tol = 1e-8, double hermiticity_tol = 1e-10,
                   double psd_floor = -1e-8) const {
    if (hermiticity_defect() > hermiticity_tol) return false;
    for (int k = 0; k < 3; ++k) {
      const double p = rho(k, k).real();
      if (p < -trace_tol || p > 1.0 + trace_tol) return false;
    }
    if (std::abs(trace() + lost - 1.0) > trace_tol) return false;
    return min_eigenvalue() >= psd_floor;
  }

  void resymmetrize() { rho = 0.5 * (rho + rho.adjoint()).eval(); }
};

/// Rotating-wave Hamiltonian H/hbar (rad/s) of the driven Lambda system at
/// time t, with the pulse envelopes applied to the peak Rabi frequencies.
/// Real symmetric, hence Hermitian, by construction.
inline Eigen::Matrix3d rwa_hamiltonian(const LambdaSystem& sys,
                                       const PulseSchedule& schedule, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("time must be finite");
  const double omega1 = sys.omega1_peak * schedule.omega1_envelope(t);
  const double omega2 = sys.omega2_peak * schedule.omega2_envelope(t);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(0, 1) = h(1, 0) = 0.5 * omega1;
  h(1, 2) = h(2, 1) = 0.5 * omega2;
  h(1, 1) = -sys.delta_one_photon;
  h(2, 2) = -sys.delta_two_photon;
  return h;
}

}  // namespace stirap_lab
