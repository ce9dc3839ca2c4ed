#pragma once

// Complete elliptic integrals (AGM), Jacobi sn/cn/dn (descending Landen),
// and periodic traveling waves
//
//   phi(z) = alpha + beta sn^2(2 K(k) z / L; k)                 (snoidal)
//   phi(z) = a + b [dn^2(2 K(k) z / L; k) - E(k)/K(k)]          (dnoidal)
//
// fitted so that the first integral
//   c (phi - phi'') - phi^3 + phi'^2/2 + phi phi''
// is independent of z.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chbreak/spectral.hpp"

namespace chbreak {

namespace detail {
inline void require_modulus(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw std::domain_error("elliptic modulus must lie in [0, 1)");
}
inline double complementary_modulus(double k) { return std::sqrt((1.0 - k) * (1.0 + k)); }
}  // namespace detail

struct CompleteIntegrals {
  double K;
  double E;
};

inline CompleteIntegrals complete_KE(double k) {
  detail::require_modulus(k);
  double a = 1.0, b = detail::complementary_modulus(k), c = k;
  double pow2 = 0.5;
  double sum = pow2 * c * c;
  for (int it = 0; it < 64 && std::abs(c) > 1e-17 * a; ++it) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = c * c / (4.0 * an);  // (a - b)/2 without the cancellation
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
  }
  const double K = std::numbers::pi / (2.0 * a);
  return {K, K * (1.0 - sum)};
}

inline double complete_K(double k) { return complete_KE(k).K; }
inline double complete_E(double k) { return complete_KE(k).E; }

struct JacobiValues {
  double sn;
  double cn;
  double dn;
};

inline JacobiValues jacobi_sn_cn_dn(double u, double k) {
  detail::require_modulus(k);
  if (k == 0.0) return {std::sin(u), std::cos(u), 1.0};
  std::array<double, 32> a{}, c{};
  a[0] = 1.0;
  double b = detail::complementary_modulus(k);
  c[0] = k;
  int n = 0;
  while (std::abs(c[n]) > 1e-16 * a[n] && n + 1 < static_cast<int>(a.size())) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i > 0; --i) phi = 0.5 * (phi + std::asin(c[i] * std::sin(phi) / a[i]));
  const double sn = std::sin(phi), cn = std::cos(phi);
  // dn > 0 on the real line; the cn / cos(phi_1 - phi_0) form is 0/0 at u = K.
  return {sn, cn, std::sqrt((1.0 - k * sn) * (1.0 + k * sn))};
}

enum class WaveForm { snoidal, dnoidal };

struct WaveParams {
  WaveForm form = WaveForm::snoidal;
  double offset = 0.0;     // alpha (snoidal) or a (dnoidal)
  double amplitude = 0.0;  // beta (snoidal) or b (dnoidal)
  double k = 0.0;
  double period = 2.0 * std::numbers::pi;  // L
  double speed = 0.0;                      // c
  double first_integral = 0.0;             // A
  bool degenerate = false;
  double fit_residual = 0.0;  // max |bracket - A| over check points
};

/// Mean of sn^2 over a period: (K - E) / (k^2 K).
inline double mean_sn2(double k) {
  if (k == 0.0) return 0.5;
  const auto [K, E] = complete_KE(k);
  return (K - E) / (k * k * K);
}

inline double wave_mean(const WaveParams& p) {
  if (p.form == WaveForm::dnoidal) return p.offset;
  return p.offset + p.amplitude * mean_sn2(p.k);
}

inline WaveParams to_dnoidal(const WaveParams& p) {
  if (p.form == WaveForm::dnoidal) return p;
  WaveParams q = p;
  q.form = WaveForm::dnoidal;
  if (p.k == 0.0) {
    if (p.amplitude != 0.0) throw std::domain_error("k = 0 admits no dnoidal form with beta != 0");
    q.offset = p.offset;
    q.amplitude = 0.0;
    return q;
  }
  q.amplitude = -p.amplitude / (p.k * p.k);
  q.offset = p.offset + p.amplitude * mean_sn2(p.k);
  return q;
}

inline WaveParams to_snoidal(const WaveParams& p) {
  if (p.form == WaveForm::snoidal) return p;
  WaveParams q = p;
  q.form = WaveForm::snoidal;
  const auto [K, E] = complete_KE(p.k);
  q.amplitude = -p.amplitude * p.k * p.k;
  q.offset = p.offset + p.amplitude * (1.0 - E / K);
  return q;
}

struct ProfilePoint {
  double value;
  double d1;
  double d2;
};

/// phi, phi', phi'' at z, from closed-form derivatives of sn^2 / dn^2.
inline ProfilePoint profile_at(const WaveParams& p, double z) {
  const auto [K, E] = complete_KE(p.k);
  const double kappa = 2.0 * K / p.period;
  const auto [sn, cn, dn] = jacobi_sn_cn_dn(kappa * z, p.k);
  const double k2 = p.k * p.k;
  // d/du sn^2 and d^2/du^2 sn^2
  const double s1 = 2.0 * sn * cn * dn;
  const double s2 = 2.0 * (cn * cn * dn * dn - sn * sn * dn * dn - k2 * sn * sn * cn * cn);
  if (p.form == WaveForm::snoidal) {
    return {p.offset + p.amplitude * sn * sn, p.amplitude * kappa * s1,
            p.amplitude * kappa * kappa * s2};
  }
  // dn^2 = 1 - k^2 sn^2
  return {p.offset + p.amplitude * (dn * dn - E / K), -p.amplitude * k2 * kappa * s1,
          -p.amplitude * k2 * kappa * kappa * s2};
}

inline void require_commensurate(const PeriodicGrid& grid, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("wave period must be positive");
  const double ratio = grid.length() / period;
  const double whole = std::round(ratio);
  if (whole < 1.0 || std::abs(ratio - whole) > 1e-9 * ratio)
    throw std::invalid_argument("grid length is not an integer multiple of the wave period");
}

/// Samples phi(x - z_shift) on the grid.
inline GridField snoidal_profile(const WaveParams& p, const PeriodicGrid& grid, double z_shift = 0.0) {
  require_commensurate(grid, p.period);
  return sample(grid, [&](double x) { return profile_at(p, x - z_shift).value; });
}

inline double first_integral_value(double value, double d1, double d2, double c) {
  return c * (value - d2) - value * value * value + 0.5 * d1 * d1 + value * d2;
}

/// Pointwise first-integral bracket with spectral derivatives.
inline GridField first_integral_series(const GridField& phi, double c) {
  require_finite(phi);
  const GridField d1 = spectral_derivative(phi, 1);
  const GridField d2 = spectral_derivative(phi, 2);
  GridField out(phi.grid());
  for (std::size_t j = 0; j < phi.size(); ++j) out[j] = first_integral_value(phi[j], d1[j], d2[j], c);
  return out;
}

class NoWaveError : public std::runtime_error {
public:
  NoWaveError(const std::string& what, std::vector<double> attainable_means, double best_residual)
      : std::runtime_error(what), attainable_means(std::move(attainable_means)),
        best_residual(best_residual) {}
  std::vector<double> attainable_means;
  double best_residual;
};

struct FitOptions {
  int collocation_points = 7;  // >= 4
  double z_offset = 0.0;       // collocation abscissae start here
  double tolerance = 1e-10;
};

namespace detail {

struct Collocation {
  double s, s1, s2;  // sn^2 and its z-derivatives at a node
};

inline std::vector<Collocation> collocation_nodes(double L, double k, int count, double z_offset) {
  const double kappa = 2.0 * complete_K(k) / L;
  std::vector<Collocation> nodes;
  for (int i = 0; i < count; ++i) {
    // Spread over half a period, where sn^2 is one-to-one.
    const double z = z_offset + (static_cast<double>(i) + 0.25) * L / (2.0 * count);
    const auto [sn, cn, dn] = jacobi_sn_cn_dn(kappa * z, k);
    nodes.push_back({sn * sn, kappa * 2.0 * sn * cn * dn,
                     kappa * kappa * 2.0 *
                         (cn * cn * dn * dn - sn * sn * dn * dn - k * k * sn * sn * cn * cn)});
  }
  return nodes;
}

struct Bracket {
  double value;
  Eigen::Vector3d grad;  // d/d(alpha, beta, c)
};

inline Bracket bracket_at(const Collocation& q, const Eigen::Vector3d& x) {
  const double alpha = x[0], beta = x[1], c = x[2];
  const double phi = alpha + beta * q.s, d1 = beta * q.s1, d2 = beta * q.s2;
  Bracket b;
  b.value = first_integral_value(phi, d1, d2, c);
  b.grad[0] = c - 3.0 * phi * phi + d2;
  b.grad[1] = c * (q.s - q.s2) - 3.0 * phi * phi * q.s + d1 * q.s1 + q.s * d2 + phi * q.s2;
  b.grad[2] = phi - d2;
  return b;
}

struct FitProblem {
  std::vector<Collocation> nodes;
  std::optional<double> mean;
  double mean_factor;

  // Differences E_i - E_0 divided by beta: removes the beta = 0 family of
  // constant solutions from the root set.
  void evaluate(const Eigen::Vector3d& x, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
    const int m = static_cast<int>(nodes.size()) - 1 + (mean ? 1 : 0);
    r.resize(m);
    J.resize(m, 3);
    const Bracket b0 = bracket_at(nodes[0], x);
    const double beta = x[1];
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const Bracket bi = bracket_at(nodes[i], x);
      const double diff = bi.value - b0.value;
      const Eigen::Vector3d g = bi.grad - b0.grad;
      const int row = static_cast<int>(i) - 1;
      r[row] = diff / beta;
      J.row(row) = g.transpose() / beta;
      J(row, 1) -= diff / (beta * beta);
    }
    if (mean) {
      r[m - 1] = x[0] + x[1] * mean_factor - *mean;
      J.row(m - 1) << 1.0, mean_factor, 0.0;
    }
  }
};

// Levenberg-Marquardt. Each damped step solves the stacked least-squares
// problem [J; sqrt(mu) D] step = [-r; 0] by QR rather than the normal
// equations, which would square the (poor, for small k) conditioning.
inline double solve_lm(const FitProblem& prob, Eigen::Vector3d& x) {
  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd J, J_try;
  prob.evaluate(x, r, J);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  const Eigen::Index m = r.size();
  for (int it = 0; it < 1000 && cost > 1e-32; ++it) {
    Eigen::MatrixXd A(m + 3, 3);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 3);
    A.topRows(m) = J;
    A.bottomRows(3).setZero();
    for (int d = 0; d < 3; ++d) A(m + d, d) = std::sqrt(mu) * std::max(J.col(d).norm(), 1e-12);
    rhs.head(m) = -r;
    const Eigen::Vector3d step = A.colPivHouseholderQr().solve(rhs);
    if (!step.allFinite()) break;
    Eigen::Vector3d x_try = x + step;
    if (std::abs(x_try[1]) < 1e-14) {
      mu *= 4.0;
      continue;
    }
    prob.evaluate(x_try, r_try, J_try);
    const double cost_try = r_try.squaredNorm();
    if (std::isfinite(cost_try) && cost_try < cost) {
      x = x_try;
      r = r_try;
      J = J_try;
      cost = cost_try;
      mu = std::max(mu / 3.0, 1e-15);
      if (step.norm() < 1e-16 * (1.0 + x.norm())) break;
    } else {
      mu *= 4.0;
      if (mu > 1e12) break;
    }
  }
  return std::sqrt(cost);
}

/// max |E(z) - A| on a dense check set, relative to the bracket's term scale.
inline double constancy_residual(const WaveParams& p, int checks = 32) {
  double worst = 0.0, scale = 1.0;
  for (int i = 0; i < checks; ++i) {
    const double z = p.period * static_cast<double>(i) / checks;
    const auto q = profile_at(p, z);
    const double e = first_integral_value(q.value, q.d1, q.d2, p.speed);
    scale = std::max({scale, std::abs(p.speed * q.value), std::pow(std::abs(q.value), 3),
                      std::abs(q.value * q.d2)});
    worst = std::max(worst, std::abs(e - p.first_integral));
  }
  return worst / scale;
}

}  // namespace detail

/// Fits (alpha, beta, c, A) of the snoidal wave with period L and modulus k by
/// collocating the first integral. For fixed (L, k) the roots are isolated,
/// so the mean is an output; when `mean_level` is given it acts as an extra
/// equation and an infeasible value raises NoWaveError. Without it the
/// slowest wave (smallest |c|) is returned.
inline WaveParams fit_traveling_wave(double L, double k, std::optional<double> mean_level = {},
                                     double lambda = 0.0, const FitOptions& opt = {}) {
  if (lambda != 0.0)
    throw std::invalid_argument("steady traveling waves of this form require lambda = 0");
  if (!(L > 0.0)) throw std::invalid_argument("wave period must be positive");
  detail::require_modulus(k);
  if (opt.collocation_points < 4) throw std::invalid_argument("need at least 4 collocation points");

  WaveParams p;
  p.k = k;
  p.period = L;
  if (k < 1e-6) {
    p.offset = mean_level.value_or(0.0);
    p.degenerate = true;
    p.first_integral = -p.offset * p.offset * p.offset;
    return p;
  }

  const double kappa = 2.0 * complete_K(k) / L;
  const double natural = kappa * kappa * k * k;
  auto nodes = detail::collocation_nodes(L, k, opt.collocation_points, opt.z_offset);

  auto search = [&](std::optional<double> mean) {
    detail::FitProblem prob{nodes, mean, mean_sn2(k)};
    std::vector<Eigen::Vector3d> roots;
    double best = std::numeric_limits<double>::infinity();
    // Closed-form seeds from matching powers of sn^2: beta = 8 kappa^2 k^2,
    // c = -3 alpha - 8 kappa^2 (1 + k^2), alpha a root of a quadratic. For
    // small k the collocation system is nearly flat along the wave family and
    // a coarse start grid alone can stall in that valley.
    std::vector<Eigen::Vector3d> starts;
    {
      const double q = kappa * kappa, P = 1.0 + k * k;
      const double b = 3.0 + 16.0 * q * P, c0 = 8.0 * q * P + 32.0 * q * q * P * P - 32.0 * q * q * k * k;
      const double disc = b * b - 12.0 * c0;
      if (disc >= 0.0)
        for (double sign : {1.0, -1.0}) {
          const double alpha = (-b + sign * std::sqrt(disc)) / 6.0;
          starts.emplace_back(alpha, 8.0 * natural, -3.0 * alpha - 8.0 * q * P);
        }
    }
    for (double alpha = -4.0; alpha <= 4.0 + 1e-12; alpha += 1.0)
      for (double c = -4.0; c <= 4.0 + 1e-12; c += 1.0)
        for (double scale : {1.0, 4.0, 16.0}) starts.emplace_back(alpha, scale * natural, c);
    for (Eigen::Vector3d x : starts) {
      const double res = detail::solve_lm(prob, x);
      best = std::min(best, res);
      if (!(res <= 1e-12) || !x.allFinite() || std::abs(x[1]) < 1e-3 * natural) continue;
      const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Eigen::Vector3d& y) {
        return (x - y).norm() <= 1e-7 * (1.0 + y.norm());
      });
      if (!seen) roots.push_back(x);
    }
    return std::make_pair(roots, best);
  };

  auto to_params = [&](const Eigen::Vector3d& x) {
    WaveParams q = p;
    q.offset = x[0];
    q.amplitude = x[1];
    q.speed = x[2];
    const auto b0 = detail::bracket_at(nodes[0], x);
    q.first_integral = b0.value;
    q.fit_residual = detail::constancy_residual(q);
    return q;
  };

  auto [roots, best] = search(mean_level);
  std::vector<WaveParams> candidates;
  for (const auto& x : roots) {
    WaveParams q = to_params(x);
    if (q.fit_residual <= opt.tolerance &&
        (!mean_level || std::abs(wave_mean(q) - *mean_level) <= opt.tolerance * (1.0 + std::abs(*mean_level))))
      candidates.push_back(q);
  }
  if (candidates.empty()) {
    std::vector<double> means;
    if (mean_level) {
      for (const auto& x : search(std::nullopt).first) means.push_back(wave_mean(to_params(x)));
    }
    std::sort(means.begin(), means.end());
    std::ostringstream msg;
    msg << "no wave at these (L,k,mean): L=" << L << " k=" << k;
    if (mean_level) msg << " mean=" << *mean_level;
    msg << "; best collocation residual " << best;
    if (!means.empty()) {
      msg << "; attainable means:";
      for (double m : means) msg << ' ' << m;
    }
    throw NoWaveError(msg.str(), means, best);
  }
  std::sort(candidates.begin(), candidates.end(), [](const WaveParams& a, const WaveParams& b) {
    if (std::abs(a.speed) != std::abs(b.speed)) return std::abs(a.speed) < std::abs(b.speed);
    return a.offset < b.offset;
  });
  return candidates.front();
}

}  // namespace chbreak
