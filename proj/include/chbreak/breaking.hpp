#pragma once

// Wave-breaking forecast and runtime audits.
//
// With a = ||u0||_{H^1} and s0 = min u0':
//   psi     = sqrt(2)/2 a^3 + a^2/4
//   eps0    = 1 - (2 sqrt(2) a^3 + a^2) / (2 s0^2)
//   lambda0 = -eps0 y(0) / 4
// Breaking is forecast when s0 < -sqrt(sqrt(2) a^3 + a^2/2) and
// 0 <= lambda < lambda0, with the upper bound
//   T+ = (1/lambda) ln(eps0 y0 / (eps0 y0 + 4 lambda))   (lambda > 0)
//   T+ = -8 / (eps0 y0)                                  (lambda = 0)
// The minimal slope y(t) obeys y' + lambda y <= psi - y^2/2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "chbreak/error.hpp"
#include "chbreak/spectral.hpp"
#include "chbreak/trajectory.hpp"

namespace chbreak {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double psi_from_norm(double a) {
  return std::numbers::sqrt2 / 2.0 * a * a * a + 0.25 * a * a;
}

inline double psi(const GridField& u0) { return psi_from_norm(sobolev_norm(u0, 1.0)); }

/// (2 sqrt(2) a^3 + a^2) / (2 s0^2); eps0 = 1 - ratio.
inline double slope_budget_ratio(double a, double s0) {
  return (2.0 * std::numbers::sqrt2 * a * a * a + a * a) / (2.0 * s0 * s0);
}

inline double epsilon0_from(double a, double s0) {
  if (s0 == 0.0) throw DegenerateDataError("degenerate: constant initial data");
  return 1.0 - slope_budget_ratio(a, s0);
}

/// Slope threshold sqrt(sqrt(2) a^3 + a^2/2) that -s0 must exceed.
inline double breaking_threshold(double a) {
  return std::sqrt(std::numbers::sqrt2 * a * a * a + 0.5 * a * a);
}

namespace detail {
// Grid argmin of u0' (ties to smallest x); throws on flat data.
inline std::pair<double, std::size_t> min_slope_of(const GridField& u0) {
  const GridField ux = spectral_derivative(u0, 1);
  const double scale = std::max(max_abs(u0), 1.0) / u0.grid().dx();
  if (max_abs(ux) <= 1e-13 * scale) throw DegenerateDataError("degenerate: constant initial data");
  return argmin(ux);
}
}  // namespace detail

inline double epsilon0(const GridField& u0) {
  const double s0 = detail::min_slope_of(u0).first;
  return epsilon0_from(sobolev_norm(u0, 1.0), s0);
}

inline double lambda0_from(double eps0, double y0) { return -eps0 * y0 / 4.0; }

inline double t_plus(double eps0, double y0, double lambda) {
  if (!(eps0 > 0.0 && eps0 < 1.0))
    throw std::domain_error("breaking threshold violated: eps0 must lie in (0, 1)");
  if (!(y0 < 0.0)) throw std::domain_error("breaking threshold violated: y(0) must be negative");
  const double lam0 = lambda0_from(eps0, y0);
  if (!(lambda >= 0.0 && lambda < lam0))
    throw std::domain_error("dissipation outside the admissible range [0, lambda0)");
  const double ey = eps0 * y0;
  if (lambda == 0.0) return -8.0 / ey;
  return std::log(ey / (ey + 4.0 * lambda)) / lambda;
}

struct BreakingForecast {
  double a = 0.0;   // ||u0||_{H^1}
  double x0 = 0.0;  // argmin u0'
  double s0 = 0.0;  // u0'(x0)
  double y0 = 0.0;  // y(0)
  double psi = 0.0;
  double eps0 = 0.0;
  double ratio = 0.0;  // 1 - eps0, kept for distance-from-threshold reporting
  double lambda0 = 0.0;
  double threshold = 0.0;
  bool condition_holds = false;
  double lambda = 0.0;
  double t_plus = kInfinity;
};

inline BreakingForecast forecast(const GridField& u0, double lambda) {
  BreakingForecast f;
  f.lambda = lambda;
  f.a = sobolev_norm(u0, 1.0);
  const auto [s0, idx] = detail::min_slope_of(u0);
  f.s0 = s0;
  f.x0 = u0.grid().x(idx);
  f.y0 = s0;
  f.psi = psi_from_norm(f.a);
  f.ratio = slope_budget_ratio(f.a, s0);
  f.eps0 = 1.0 - f.ratio;
  f.lambda0 = lambda0_from(f.eps0, f.y0);
  f.threshold = breaking_threshold(f.a);
  f.condition_holds = s0 < -f.threshold;
  if (f.condition_holds && lambda >= 0.0 && lambda < f.lambda0) f.t_plus = t_plus(f.eps0, f.y0, lambda);
  return f;
}

struct MinSlopeSample {
  double t;
  double y;
  double xi;
};

namespace detail {
// Trigonometric interpolant of u and its x-derivatives at an arbitrary point.
struct Interpolant {
  const PeriodicGrid& grid;
  Spectrum modes;

  // d^order/dx^order of the interpolant at x (Nyquist dropped for order >= 1).
  double derivative(double x, int order) const {
    const std::size_t n = grid.size();
    const double offset = x + grid.length() / 2.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < modes.size(); ++j) {
      if (order > 0 && is_nyquist(grid, j)) continue;
      const double k = grid.wavenumber(j);
      const double weight = (j == 0 || is_nyquist(grid, j)) ? 1.0 : 2.0;
      std::complex<double> factor = std::polar(1.0, k * offset);
      for (int q = 0; q < order; ++q) factor *= std::complex<double>(0.0, k);
      sum += weight * (modes[j] * factor).real();
    }
    return sum / static_cast<double>(n);
  }
};

// Newton polish of min u_x starting at a grid argmin; never worse than the grid value.
inline std::pair<double, double> polished_min_slope(const GridField& u, std::size_t idx, double grid_value) {
  const Interpolant f{u.grid(), forward(u)};
  const double dx = u.grid().dx();
  const double x_grid = u.grid().x(idx);
  double x = x_grid;
  for (int it = 0; it < 30; ++it) {
    const double g = f.derivative(x, 2);
    const double h = f.derivative(x, 3);
    if (!(h > 0.0)) break;
    double step = g / h;
    if (std::abs(step) > 0.5 * dx) step = std::copysign(0.5 * dx, step);
    x -= step;
    if (std::abs(x - x_grid) > dx) break;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  if (std::abs(x - x_grid) > dx) return {grid_value, x_grid};
  const double y = f.derivative(x, 1);
  if (!(y < grid_value)) return {grid_value, x_grid};
  return {y, x};
}
}  // namespace detail

/// Minimal slope of a single field. With `refine`, the grid argmin is
/// polished on the trigonometric interpolant of u_x (Newton on u_xx = 0).
inline MinSlopeSample min_slope(const GridField& u, double t = 0.0, bool refine = false) {
  const GridField ux = spectral_derivative(u, 1);
  const auto [y, idx] = argmin(ux);
  if (!refine) return {t, y, u.grid().x(idx)};
  const auto [yr, xr] = detail::polished_min_slope(u, idx, y);
  return {t, yr, xr};
}

inline std::vector<MinSlopeSample> track_min_slope(const Trajectory& traj, bool refine = false) {
  std::vector<MinSlopeSample> out;
  out.reserve(traj.records());
  for (std::size_t i = 0; i < traj.records(); ++i)
    out.push_back(min_slope(traj.snapshots[i], traj.times[i], refine));
  return out;
}

struct RiccatiAudit {
  double max_violation = -kInfinity;  // max of y' + lambda y + y^2/2 - psi
  double max_excess = -kInfinity;     // max of violation - tolerance
  double tolerance_at_max = 0.0;
  double worst_time = 0.0;
  std::size_t points = 0;
  bool compliant() const { return max_excess <= 0.0; }
};

/// Checks the Riccati inequality at interior samples with centered
/// differences (non-uniform spacing allowed). Each point's tolerance is
/// `fd_safety * h^2 |y'''| + absolute_tol`, with y''' estimated by
/// divided differences of the series itself.
inline RiccatiAudit riccati_audit(const std::vector<MinSlopeSample>& series, double lambda,
                                  double psi_value, double fd_safety = 1.0,
                                  double absolute_tol = 1e-6) {
  if (series.size() < 3) throw std::invalid_argument("riccati audit needs at least 3 samples");
  const std::size_t n = series.size();

  // Third divided differences on 4-point windows, scaled by 3! to estimate y'''.
  std::vector<double> d3(n, 0.0);
  if (n >= 4) {
    std::vector<double> window_value;
    for (std::size_t i = 0; i + 3 < n; ++i) {
      double f[4], t[4];
      for (int q = 0; q < 4; ++q) {
        f[q] = series[i + q].y;
        t[q] = series[i + q].t;
      }
      for (int level = 1; level < 4; ++level)
        for (int q = 3; q >= level; --q) f[q] = (f[q] - f[q - 1]) / (t[q] - t[q - level]);
      window_value.push_back(6.0 * std::abs(f[3]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0;
      for (std::size_t w = (i >= 3 ? i - 3 : 0); w <= i && w < window_value.size(); ++w)
        m = std::max(m, window_value[w]);
      d3[i] = m;
    }
  }

  RiccatiAudit out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = series[i].t - series[i - 1].t;
    const double hp = series[i + 1].t - series[i].t;
    const double ym = series[i - 1].y, y = series[i].y, yp = series[i + 1].y;
    const double dy = (hm * hm * yp - hp * hp * ym + (hp * hp - hm * hm) * y) / (hm * hp * (hm + hp));
    const double violation = dy + lambda * y + 0.5 * y * y - psi_value;
    const double h = std::max(hm, hp);
    const double tol = fd_safety * h * h * d3[i] + absolute_tol;
    ++out.points;
    if (violation > out.max_violation) out.max_violation = violation;
    if (violation - tol > out.max_excess) {
      out.max_excess = violation - tol;
      out.tolerance_at_max = tol;
      out.worst_time = series[i].t;
    }
  }
  return out;
}

/// max over records of |u(t, xi(t))| / (sqrt(2)/2 exp(-lambda t) a).
inline double pointwise_bound_ratio(const Trajectory& traj, double lambda, double a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.records(); ++i) {
    const double bound = std::numbers::sqrt2 / 2.0 * std::exp(-lambda * traj.times[i]) * a;
    const double value = std::abs(traj.diagnostics[i].u_at_min_slope);
    worst = std::max(worst, bound > 0.0 ? value / bound : (value > 0.0 ? kInfinity : 0.0));
  }
  return worst;
}

}  // namespace chbreak
