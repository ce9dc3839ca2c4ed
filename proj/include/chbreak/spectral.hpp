#pragma once

// Periodic grid, sampled fields and the Fourier machinery on top of them:
// differentiation, the Helmholtz operator 1 - d^2/dx^2 and its inverse,
// rectangle-rule quadrature and Sobolev norms.
//
// Wavenumber of mode j is k_j = 2*pi*j/L. Transforms are unnormalized
// forward / (1/n)-normalized inverse.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "chbreak/error.hpp"

namespace chbreak {

class PeriodicGrid {
public:
  PeriodicGrid(double length, std::size_t n) : length_(length), n_(n) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw std::invalid_argument("grid length must be positive and finite");
    if (n < 16 || (n & (n - 1)) != 0)
      throw std::invalid_argument("grid size must be a power of two >= 16");
  }

  double length() const { return length_; }
  std::size_t size() const { return n_; }
  double dx() const { return length_ / static_cast<double>(n_); }

  /// Sample point x_j = -L/2 + j*dx.
  double x(std::size_t j) const {
    return -0.5 * length_ + static_cast<double>(j) * dx();
  }

  double wavenumber(std::size_t mode) const {
    return 2.0 * std::numbers::pi * static_cast<double>(mode) / length_;
  }

  std::size_t modes() const { return n_ / 2 + 1; }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

private:
  double length_;
  std::size_t n_;
};

/// Real samples of a function on a PeriodicGrid. NaN/Inf entries mark a
/// blown-up state; operations refuse such input instead of propagating it.
class GridField {
public:
  explicit GridField(PeriodicGrid grid)
      : grid_(grid), values_(grid.size(), 0.0) {}

  GridField(PeriodicGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("field size does not match grid");
  }

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }

  bool finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  GridField& operator+=(const GridField& other) {
    check_same_grid(other);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
    return *this;
  }
  GridField& operator-=(const GridField& other) {
    check_same_grid(other);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= other.values_[j];
    return *this;
  }
  GridField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(GridField a, double s) { return a *= s; }
  friend GridField operator*(double s, GridField a) { return a *= s; }

  /// Pointwise product.
  friend GridField hadamard(const GridField& a, const GridField& b) {
    a.check_same_grid(b);
    GridField out(a.grid_);
    for (std::size_t j = 0; j < a.size(); ++j) out.values_[j] = a.values_[j] * b.values_[j];
    return out;
  }

private:
  void check_same_grid(const GridField& other) const {
    if (!(grid_ == other.grid_)) throw std::invalid_argument("fields live on different grids");
  }

  PeriodicGrid grid_;
  std::vector<double> values_;
};

template <class Fn>
GridField sample(const PeriodicGrid& grid, Fn&& fn) {
  GridField out(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = fn(grid.x(j));
  return out;
}

/// Pointwise map v -> fn(v).
template <class Fn>
GridField map(const GridField& f, Fn&& fn) {
  GridField out(f.grid());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = fn(f[j]);
  return out;
}

inline void require_finite(const GridField& f, const char* message = "non-finite field") {
  if (!f.finite()) throw NumericalError(message);
}

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// The FFTW planner is not thread-safe; execution of an existing plan on
// new (equally aligned) arrays is.
inline const PlanPair& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    const int len = static_cast<int>(n);
    RealBuffer real(fftw_alloc_real(n));
    ComplexBuffer spec(fftw_alloc_complex(n / 2 + 1));
    PlanPair p{fftw_plan_dft_r2c_1d(len, real.get(), spec.get(), FFTW_ESTIMATE),
               fftw_plan_dft_c2r_1d(len, spec.get(), real.get(), FFTW_ESTIMATE)};
    it = cache.emplace(n, p).first;
  }
  return it->second;
}

}  // namespace detail

inline Spectrum forward(const GridField& f) {
  const std::size_t n = f.size();
  const auto& plans = detail::plans_for(n);
  detail::RealBuffer in(fftw_alloc_real(n));
  detail::ComplexBuffer out(fftw_alloc_complex(n / 2 + 1));
  std::copy(f.values().begin(), f.values().end(), in.get());
  fftw_execute_dft_r2c(plans.forward, in.get(), out.get());
  Spectrum s(n / 2 + 1);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = {out[j][0], out[j][1]};
  return s;
}

inline GridField inverse(const PeriodicGrid& grid, const Spectrum& s) {
  const std::size_t n = grid.size();
  if (s.size() != grid.modes()) throw std::invalid_argument("spectrum size does not match grid");
  const auto& plans = detail::plans_for(n);
  detail::ComplexBuffer in(fftw_alloc_complex(n / 2 + 1));
  detail::RealBuffer out(fftw_alloc_real(n));
  for (std::size_t j = 0; j < s.size(); ++j) {
    in[j][0] = s[j].real();
    in[j][1] = s[j].imag();
  }
  fftw_execute_dft_c2r(plans.backward, in.get(), out.get());
  GridField f(grid);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = out[j] * scale;
  return f;
}

/// Multiplies mode j by symbol(j, k_j). An odd symbol should return 0 at the
/// Nyquist mode; use `is_nyquist` to detect it.
template <class Symbol>
GridField apply_multiplier(const GridField& f, Symbol&& symbol) {
  require_finite(f);
  const auto& grid = f.grid();
  Spectrum s = forward(f);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] *= symbol(j, grid.wavenumber(j));
  return inverse(grid, s);
}

inline bool is_nyquist(const PeriodicGrid& grid, std::size_t mode) { return mode == grid.size() / 2; }

/// (i k)^order applied in Fourier space. Odd orders drop the Nyquist mode.
inline std::complex<double> derivative_symbol(const PeriodicGrid& grid, std::size_t mode,
                                              double k, int order) {
  if (order % 2 != 0 && is_nyquist(grid, mode)) return 0.0;
  std::complex<double> ik(0.0, k);
  std::complex<double> out = 1.0;
  for (int i = 0; i < order; ++i) out *= ik;
  return out;
}

inline GridField spectral_derivative(const GridField& f, int order = 1) {
  if (order < 1) throw std::invalid_argument("derivative order must be >= 1");
  const auto& grid = f.grid();
  return apply_multiplier(f, [&](std::size_t j, double k) {
    return derivative_symbol(grid, j, k, order);
  });
}

/// Lambda^{-2} = (1 - d^2/dx^2)^{-1}; on the line this is convolution with
/// exp(-|x|)/2, here the periodized version of it.
inline GridField helmholtz_inverse(const GridField& f) {
  return apply_multiplier(f, [](std::size_t, double k) {
    return std::complex<double>(1.0 / (1.0 + k * k));
  });
}

inline GridField helmholtz_apply(const GridField& f) {
  return apply_multiplier(f, [](std::size_t, double k) {
    return std::complex<double>(1.0 + k * k);
  });
}

/// d/dx Lambda^{-2} in one transform.
inline GridField dx_helmholtz_inverse(const GridField& f) {
  const auto& grid = f.grid();
  return apply_multiplier(f, [&](std::size_t j, double k) {
    if (is_nyquist(grid, j)) return std::complex<double>(0.0);
    return std::complex<double>(0.0, k / (1.0 + k * k));
  });
}

/// Highest mode index retained by the 2/3 rule.
inline std::size_t dealias_cutoff(const PeriodicGrid& grid) { return grid.size() / 3; }

inline void truncate_two_thirds(const PeriodicGrid& grid, Spectrum& s) {
  const std::size_t cut = dealias_cutoff(grid);
  for (std::size_t j = cut + 1; j < s.size(); ++j) s[j] = 0.0;
}

inline GridField dealias(const GridField& f) {
  const std::size_t cut = dealias_cutoff(f.grid());
  return apply_multiplier(f, [cut](std::size_t j, double) {
    return std::complex<double>(j <= cut ? 1.0 : 0.0);
  });
}

/// Rectangle rule dx * sum(f); spectrally accurate for smooth periodic data.
inline double quadrature(const GridField& f) {
  require_finite(f);
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return f.grid().dx() * sum;
}

/// ||f||_{H^s} normalized so that ||f||_{H^1}^2 = int(f^2 + f_x^2) dx.
inline double sobolev_norm(const GridField& f, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("Sobolev index must be >= 0");
  require_finite(f);
  const auto& grid = f.grid();
  const Spectrum spec = forward(f);
  double sum = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double k = grid.wavenumber(j);
    const double weight = (j == 0 || is_nyquist(grid, j)) ? 1.0 : 2.0;
    sum += weight * std::pow(1.0 + k * k, s) * std::norm(spec[j]);
  }
  const double n = static_cast<double>(grid.size());
  return std::sqrt(sum * grid.length() / (n * n));
}

/// Cyclic shift by `steps` grid points: out(x_j) = f(x_{j - steps}).
inline GridField shift(const GridField& f, long steps) {
  GridField out(f.grid());
  const long n = static_cast<long>(f.size());
  for (long j = 0; j < n; ++j) {
    const long src = ((j - steps) % n + n) % n;
    out[static_cast<std::size_t>(j)] = f[static_cast<std::size_t>(src)];
  }
  return out;
}

inline double max_abs(const GridField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Smallest value and its first (smallest-x) index.
inline std::pair<double, std::size_t> argmin(const GridField& f) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < f.size(); ++j)
    if (f[j] < f[best]) best = j;
  return {f[best], best};
}

/// sqrt(quadrature((a-b)^2)).
inline double l2_distance(const GridField& a, const GridField& b) {
  const GridField d = a - b;
  return std::sqrt(quadrature(hadamard(d, d)));
}

}  // namespace chbreak
