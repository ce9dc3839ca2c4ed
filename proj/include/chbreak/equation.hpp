#pragma once

// The weakly dissipative equation
//
//   u_t - u_txx + lambda (u - u_xx) + 3 u^2 u_x = u u_xxx + 2 u_x u_xx
//
// in nonlocal form u_t = -u u_x - d/dx Lambda^{-2}(u^2 + u_x^2/2 + h(u)) - lambda u,
// with h(u) = u^3 - 3/2 u^2.

#include <cmath>

#include "chbreak/spectral.hpp"

namespace chbreak {

struct EquationParams {
  double lambda = 0.0;
  /// 2/3-rule truncation of the nonlinear products inside rhs().
  bool dealias = false;
};

inline double h_of(double u) { return u * u * u - 1.5 * u * u; }

inline GridField nonlinearity_h(const GridField& u) {
  require_finite(u);
  return map(u, h_of);
}

/// Time derivative of u under the nonlocal evolution.
inline GridField rhs(const GridField& u, const EquationParams& p) {
  require_finite(u, "blow-up detected in RHS");
  const auto& grid = u.grid();
  const GridField ux = spectral_derivative(u, 1);

  GridField advection(grid);
  GridField source(grid);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double v = u[j];
    const double s = ux[j];
    advection[j] = v * s;
    source[j] = v * v + 0.5 * s * s + h_of(v);
  }

  // -(u u_x) - i k/(1+k^2) * source, assembled in Fourier space.
  Spectrum adv = forward(advection);
  Spectrum src = forward(source);
  if (p.dealias) {
    truncate_two_thirds(grid, adv);
    truncate_two_thirds(grid, src);
  }
  Spectrum total(adv.size());
  for (std::size_t j = 0; j < total.size(); ++j) {
    const double k = grid.wavenumber(j);
    const std::complex<double> dxinv =
        is_nyquist(grid, j) ? std::complex<double>(0.0) : std::complex<double>(0.0, k / (1.0 + k * k));
    total[j] = -adv[j] - dxinv * src[j];
  }
  GridField out = inverse(grid, total);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= p.lambda * u[j];
  require_finite(out, "blow-up detected in RHS");
  return out;
}

/// Pointwise LHS - RHS of the local third-order form, with u_t supplied.
inline GridField residual_local_form(const GridField& u, const GridField& ut,
                                     const EquationParams& p) {
  require_finite(u);
  require_finite(ut);
  const GridField ux = spectral_derivative(u, 1);
  const GridField uxx = spectral_derivative(u, 2);
  const GridField uxxx = spectral_derivative(u, 3);
  const GridField utxx = spectral_derivative(ut, 2);
  GridField r(u.grid());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double lhs = ut[j] - utxx[j] + p.lambda * (u[j] - uxx[j]) + 3.0 * u[j] * u[j] * ux[j];
    const double rhs_local = u[j] * uxxx[j] + 2.0 * ux[j] * uxx[j];
    r[j] = lhs - rhs_local;
  }
  return r;
}

/// Pointwise m_t + u m_x + 2 u_x m + lambda m + d/dx h(u), m = u - u_xx.
inline GridField residual_m_form(const GridField& u, const GridField& ut,
                                 const EquationParams& p) {
  require_finite(u);
  require_finite(ut);
  const GridField m = u - spectral_derivative(u, 2);
  const GridField mt = ut - spectral_derivative(ut, 2);
  const GridField mx = spectral_derivative(m, 1);
  const GridField ux = spectral_derivative(u, 1);
  const GridField dh = spectral_derivative(nonlinearity_h(u), 1);
  GridField r(u.grid());
  for (std::size_t j = 0; j < u.size(); ++j)
    r[j] = mt[j] + u[j] * mx[j] + 2.0 * ux[j] * m[j] + p.lambda * m[j] + dh[j];
  return r;
}

}  // namespace chbreak
