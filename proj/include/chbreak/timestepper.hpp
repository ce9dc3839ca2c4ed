#pragma once

// Classical RK4 on u_t = rhs(u) with an adaptive step
//
//   dt = min(dt_max, cfl * dx / max|u|, cfl / max|u_x|)
//
// The second bound is the advective CFL limit. The third follows the
// Riccati time scale of the slope equation (time to blow-up ~ 2/|y|).
// On a fixed grid the discrete slope saturates at O(max|u| / dx), so the
// underflow test is applied to the slope-limited step cfl / max|u_x|:
// falling below dt_min with |y| above the slope ceiling is the breaking
// verdict, below dt_min without a steep slope is reported as nonfinite.
// Amplitude blow-up surfaces as a non-finite field, also nonfinite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "chbreak/equation.hpp"
#include "chbreak/invariants.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/trajectory.hpp"

namespace chbreak {

struct StepControl {
  double cfl = 0.3;
  double dt_max = 0.01;
  double dt_min = 1e-6;
  double t_end = 1.0;
  double record_every = 0.01;
  double slope_ceiling = 1e3;
  /// > 0 switches to fixed-step mode (no adaptivity, no underflow check).
  double fixed_dt = 0.0;

  void validate() const {
    auto bad = [](const char* what) { throw std::invalid_argument(what); };
    if (!(cfl > 0.0 && cfl <= 1.0)) bad("cfl must lie in (0, 1]");
    if (!(dt_min > 0.0 && dt_min < dt_max)) bad("need 0 < dt_min < dt_max");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) bad("t_end must be positive");
    if (!(record_every > 0.0)) bad("record_every must be positive");
    if (!(slope_ceiling > 0.0)) bad("slope_ceiling must be positive");
    if (!(fixed_dt >= 0.0)) bad("fixed_dt must be >= 0");
  }
};

inline GridField step_rk4(const GridField& u, double dt, const EquationParams& p) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  GridField out = u;
  try {
    const GridField k1 = rhs(u, p);
    const GridField k2 = rhs(u + (0.5 * dt) * k1, p);
    const GridField k3 = rhs(u + (0.5 * dt) * k2, p);
    const GridField k4 = rhs(u + dt * k3, p);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  } catch (const NumericalError&) {
    throw NumericalError("nonfinite");
  }
  if (!out.finite()) throw NumericalError("nonfinite");
  return out;
}

inline Diagnostics diagnose(const GridField& u) {
  Diagnostics d;
  const GridField ux = spectral_derivative(u, 1);
  const auto [y, idx] = argmin(ux);
  d.min_slope = y;
  d.min_slope_x = u.grid().x(idx);
  d.u_at_min_slope = u[idx];
  d.h0 = h0(u);
  d.energy = 0.5 * (quadrature(hadamard(u, u)) + quadrature(hadamard(ux, ux)));
  d.h1 = h1(u);
  d.h1_norm = sobolev_norm(u, 1.0);
  d.m_h1_norm = sobolev_norm(helmholtz_apply(u), 1.0);
  return d;
}

inline constexpr double kBoundaryDecay = 1e-12;

inline Trajectory integrate(const GridField& u0, const EquationParams& p, const StepControl& ctl) {
  ctl.validate();
  require_finite(u0);

  Trajectory traj;
  const double edge = std::max(std::abs(u0[0]), std::abs(u0[u0.size() - 1]));
  if (edge > kBoundaryDecay) {
    std::ostringstream msg;
    msg << "initial data does not decay at the box edge (|u| = " << edge << ")";
    traj.warnings.push_back(msg.str());
  }

  auto record = [&](double t, const GridField& u) {
    traj.times.push_back(t);
    traj.snapshots.push_back(u);
    traj.diagnostics.push_back(diagnose(u));
  };

  GridField u = u0;
  double t = 0.0;
  record(t, u);
  std::size_t record_index = 1;
  const double dx = u.grid().dx();
  const double tiny = std::numeric_limits<double>::min();
  const bool fixed = ctl.fixed_dt > 0.0;

  while (true) {
    double next_record = static_cast<double>(record_index) * ctl.record_every;
    if (std::abs(next_record - ctl.t_end) <= 1e-9 * ctl.record_every) next_record = ctl.t_end;
    const double target = std::min(next_record, ctl.t_end);

    double dt_prop = ctl.fixed_dt;
    if (!fixed) {
      const GridField ux = spectral_derivative(u, 1);
      const double umax = std::max(max_abs(u), tiny);
      const double smax = std::max(max_abs(ux), tiny);
      const double dt_slope = ctl.cfl / smax;
      const double dt_adv = ctl.cfl * dx / umax;
      dt_prop = std::min({ctl.dt_max, dt_adv, dt_slope});
      if (dt_slope < ctl.dt_min) {
        const double y = argmin(ux).first;
        const bool steep = std::abs(y) > ctl.slope_ceiling;
        traj.termination = steep ? Termination::breaking_detected : Termination::nonfinite;
        if (t > traj.times.back()) record(t, u);
        break;
      }
    }
    traj.last_dt = dt_prop;

    const double remaining = target - t;
    const bool lands = remaining <= dt_prop * (1.0 + 1e-9);
    const double dt = lands ? remaining : dt_prop;
    try {
      u = step_rk4(u, dt, p);
    } catch (const NumericalError&) {
      traj.termination = Termination::nonfinite;
      if (t > traj.times.back()) record(t, u);
      break;
    }
    ++traj.steps;
    t = lands ? target : t + dt;

    if (lands) {
      const bool done = target >= ctl.t_end;
      if (next_record <= target || done) {
        record(t, u);
        if (next_record <= target) ++record_index;
      }
      if (done) {
        traj.termination = Termination::completed;
        break;
      }
    }
  }
  return traj;
}

}  // namespace chbreak
