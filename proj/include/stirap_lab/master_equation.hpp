#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "stirap_lab/lambda_system.hpp"
#include "stirap_lab/ode.hpp"

namespace stirap_lab {

struct EvolveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
};

struct Sample {
  double t = 0.0;
  QuantumState state;
};

namespace detail {

// Flattened integration state: row-major rho followed by the lost fraction.
using MasterState = Eigen::Matrix<std::complex<double>, 10, 1>;

inline MasterState pack(const QuantumState& s) {
  MasterState y;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) y[3 * r + c] = s.rho(r, c);
  y[9] = s.lost;
  return y;
}

inline QuantumState unpack(const MasterState& y) {
  QuantumState s;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) s.rho(r, c) = y[3 * r + c];
  s.lost = y[9].real();
  s.resymmetrize();
  return s;
}

/// drho/dt = -i[H, rho] - {Gamma, rho}/2 + dephasing of the two-photon
/// coherence; decayed population is accumulated in the lost channel, so
/// trace(rho) + lost is conserved exactly by the right-hand side.
struct MasterRhs {
  const LambdaSystem& sys;
  const PulseSchedule& schedule;

  MasterState operator()(double t, const MasterState& y) const {
    Eigen::Matrix3cd rho;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rho(r, c) = y[3 * r + c];

    const Eigen::Matrix3d h = rwa_hamiltonian(sys, schedule, t);
    const std::complex<double> im(0.0, 1.0);
    Eigen::Matrix3cd drho = -im * (h * rho - rho * h);

    const double ge = sys.gamma_e, gg = sys.gamma_g;
    // anticommutator with Gamma = diag(0, gamma_e, gamma_g)
    drho(0, 1) -= 0.5 * ge * rho(0, 1);
    drho(1, 0) -= 0.5 * ge * rho(1, 0);
    drho(1, 1) -= ge * rho(1, 1);
    drho(1, 2) -= 0.5 * (ge + gg) * rho(1, 2);
    drho(2, 1) -= 0.5 * (ge + gg) * rho(2, 1);
    drho(0, 2) -= 0.5 * gg * rho(0, 2);
    drho(2, 0) -= 0.5 * gg * rho(2, 0);
    drho(2, 2) -= gg * rho(2, 2);

    // Lindblad dephasing L = sqrt(gd/2) (|i><i| - |g><g|): the |i><g|
    // coherence damps at gd, the coherences through |e> at gd/4.
    const double gd = sys.laser_dephasing;
    if (gd > 0.0) {
      drho(0, 2) -= gd * rho(0, 2);
      drho(2, 0) -= gd * rho(2, 0);
      drho(0, 1) -= 0.25 * gd * rho(0, 1);
      drho(1, 0) -= 0.25 * gd * rho(1, 0);
      drho(1, 2) -= 0.25 * gd * rho(1, 2);
      drho(2, 1) -= 0.25 * gd * rho(2, 1);
    }

    MasterState dy;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) dy[3 * r + c] = drho(r, c);
    dy[9] = ge * rho(1, 1).real() + gg * rho(2, 2).real();
    return dy;
  }
};

/// Core propagator with a per-accepted-step observer.
template <typename Observer>
QuantumState propagate(const LambdaSystem& sys, const PulseSchedule& schedule,
                       const QuantumState& state0, double t0, double t1,
                       const EvolveOptions& opts, Observer&& observer) {
  MasterState y = pack(state0);
  OdeOptions ode;
  ode.rtol = opts.rtol;
  ode.atol = opts.atol;
  integrate_adaptive(MasterRhs{sys, schedule}, y, t0, t1, ode,
                     std::forward<Observer>(observer));
  return unpack(y);
}

}  // namespace detail

/// Evolve the state through [t_span.first, t_span.second], sampling every
/// sample_dt (the final time is always included).  Each sample is
/// re-symmetrized; the invariants of QuantumState hold up to the
/// integration tolerance.
inline std::vector<Sample> evolve(const LambdaSystem& sys,
                                  const PulseSchedule& schedule,
                                  const QuantumState& state0,
                                  std::pair<double, double> t_span, double sample_dt,
                                  const EvolveOptions& opts = {}) {
  sys.validate();
  schedule.validate();
  if (!(t_span.second >= t_span.first))
    throw std::invalid_argument("t_span must be ordered");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be > 0");
  if (!state0.is_physical())
    throw std::invalid_argument("initial state violates the density-matrix invariants");

  std::vector<Sample> samples;
  QuantumState state = state0;
  double t = t_span.first;
  samples.push_back({t, state});
  while (t < t_span.second) {
    const double t_next = std::min(t + sample_dt, t_span.second);
    state = detail::propagate(sys, schedule, state, t, t_next, opts,
                              [](double, const detail::MasterState&) {});
    t = t_next;
    samples.push_back({t, state});
  }
  return samples;
}

/// Final state only, tracking the running maximum of the |e> population at
/// every accepted integrator step.
inline QuantumState evolve_final(const LambdaSystem& sys,
                                 const PulseSchedule& schedule,
                                 const QuantumState& state0, double t0, double t1,
                                 const EvolveOptions& opts = {},
                                 double* max_e_pop = nullptr) {
  sys.validate();
  schedule.validate();
  QuantumState out = detail::propagate(
      sys, schedule, state0, t0, t1, opts,
      [&](double, const detail::MasterState& y) {
        if (max_e_pop) *max_e_pop = std::max(*max_e_pop, y[4].real());
      });
  out.resymmetrize();
  return out;
}

}  // namespace stirap_lab
