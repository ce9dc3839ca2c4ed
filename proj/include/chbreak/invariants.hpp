#pragma once

// Conserved quantities and drift auditing.
//
//   H0 = int u,  H = 1/2 int (u^2 + u_x^2),  H1 = int (u^4/4 + u u_x^2/2)
//
// For lambda = 0 all three are constant in t. For lambda != 0 mass and
// energy decay like exp(-lambda t) and exp(-2 lambda t), so the weighted
// pair exp(lambda t) H0, exp(2 lambda t) H is constant (these are the
// integrals of the weighted current densities). No weighted analogue of H1
// is audited.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "chbreak/spectral.hpp"
#include "chbreak/trajectory.hpp"

namespace chbreak {

inline double h0(const GridField& u) { return quadrature(u); }

inline double h_energy(const GridField& u) {
  const GridField ux = spectral_derivative(u, 1);
  return 0.5 * (quadrature(hadamard(u, u)) + quadrature(hadamard(ux, ux)));
}

inline double h1(const GridField& u) {
  const GridField ux = spectral_derivative(u, 1);
  GridField density(u.grid());
  for (std::size_t j = 0; j < u.size(); ++j)
    density[j] = 0.25 * std::pow(u[j], 4) + 0.5 * u[j] * ux[j] * ux[j];
  return quadrature(density);
}

/// (exp(lambda t) H0, exp(2 lambda t) H).
inline std::pair<double, double> weighted_invariants(const GridField& u, double t, double lambda) {
  return {std::exp(lambda * t) * h0(u), std::exp(2.0 * lambda * t) * h_energy(u)};
}

enum class Quantity { H0, H, H1, H0w, Hw };

inline std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::H0: return "H0";
    case Quantity::H: return "H";
    case Quantity::H1: return "H1";
    case Quantity::H0w: return "H0w";
    case Quantity::Hw: return "Hw";
  }
  return "?";
}

inline constexpr double kDriftFloor = 1e-14;

struct QuantitySeries {
  Quantity id;
  std::vector<double> values;
  double max_relative_drift = 0.0;
};

struct InvariantReport {
  double lambda = 0.0;
  std::vector<double> times;
  std::vector<QuantitySeries> quantities;
  // Inequality checks for lambda > 0 (unweighted energy and H^1 norm never
  // exceed their initial values). Vacuously true for lambda <= 0.
  bool energy_bound_holds = true;
  bool h1_norm_bound_holds = true;
  // Weighted quantities constant to within `equality_tolerance`, i.e. the
  // stated "<=" is attained as an equality.
  bool weighted_equality_observed = false;

  const QuantitySeries& get(Quantity q) const {
    for (const auto& s : quantities)
      if (s.id == q) return s;
    throw std::out_of_range("quantity not audited");
  }
};

inline double relative_drift(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double ref = std::max(std::abs(v.front()), kDriftFloor);
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x - v.front()) / ref);
  return worst;
}

inline InvariantReport audit(const Trajectory& traj, double lambda,
                             double bound_tolerance = 1e-8, double equality_tolerance = 1e-8) {
  if (traj.empty()) throw std::invalid_argument("cannot audit an empty trajectory");
  InvariantReport rep;
  rep.lambda = lambda;
  rep.times = traj.times;

  auto add = [&](Quantity id, auto&& value_at) {
    QuantitySeries s{id, {}, 0.0};
    for (std::size_t i = 0; i < traj.records(); ++i) s.values.push_back(value_at(i));
    s.max_relative_drift = relative_drift(s.values);
    rep.quantities.push_back(std::move(s));
  };
  const auto& d = traj.diagnostics;
  if (lambda == 0.0) {
    add(Quantity::H0, [&](std::size_t i) { return d[i].h0; });
    add(Quantity::H, [&](std::size_t i) { return d[i].energy; });
    add(Quantity::H1, [&](std::size_t i) { return d[i].h1; });
  } else {
    add(Quantity::H0w, [&](std::size_t i) { return std::exp(lambda * traj.times[i]) * d[i].h0; });
    add(Quantity::Hw,
        [&](std::size_t i) { return std::exp(2.0 * lambda * traj.times[i]) * d[i].energy; });
    rep.weighted_equality_observed = rep.get(Quantity::H0w).max_relative_drift <= equality_tolerance &&
                                     rep.get(Quantity::Hw).max_relative_drift <= equality_tolerance;
  }

  if (lambda > 0.0) {
    const double e0 = d.front().energy;
    const double n0 = d.front().h1_norm;
    for (const auto& r : d) {
      if (r.energy > e0 * (1.0 + bound_tolerance)) rep.energy_bound_holds = false;
      if (r.h1_norm > n0 * (1.0 + bound_tolerance)) rep.h1_norm_bound_holds = false;
    }
  }
  return rep;
}

}  // namespace chbreak
