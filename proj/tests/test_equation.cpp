#include <cmath>
#include <numbers>
#include <random>

#include <catch_amalgamated.hpp>

#include "chbreak/equation.hpp"
#include "test_support.hpp"

using namespace chbreak;
using chbreak::testing::gaussian;
using chbreak::testing::max_abs_diff;
using chbreak::testing::random_band_limited;

namespace {
constexpr double pi = std::numbers::pi;

// Largest term magnitude in the local form, for relative residual checks.
double local_scale(const GridField& u, const GridField& ut) {
  const auto ux = spectral_derivative(u, 1), uxx = spectral_derivative(u, 2),
             uxxx = spectral_derivative(u, 3), utxx = spectral_derivative(ut, 2);
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j)
    s = std::max({s, std::abs(ut[j]), std::abs(utxx[j]), std::abs(3 * u[j] * u[j] * ux[j]),
                  std::abs(u[j] * uxxx[j]), std::abs(2 * ux[j] * uxx[j]), std::abs(uxx[j])});
  return s;
}
}  // namespace

TEST_CASE("h(u) pointwise", "[equation]") {
  PeriodicGrid g(10.0, 32);
  CHECK(max_abs(nonlinearity_h(GridField(g))) == 0.0);
  const auto one = nonlinearity_h(sample(g, [](double) { return 1.0; }));
  const auto mone = nonlinearity_h(sample(g, [](double) { return -1.0; }));
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(one[j] == -0.5);
    CHECK(mone[j] == -2.5);
  }
  GridField bad(g);
  bad[0] = std::nan("");
  CHECK_THROWS_AS(nonlinearity_h(bad), NumericalError);
}

TEST_CASE("rhs on trivial states", "[equation]") {
  PeriodicGrid g(40.0, 128);
  CHECK(max_abs(rhs(GridField(g), {0.3, false})) == 0.0);
  for (double lambda : {0.0, 0.7, -0.2}) {
    const auto c = sample(g, [](double) { return 1.3; });
    const auto r = rhs(c, {lambda, false});
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(r[j] + lambda * 1.3) < 1e-13);
  }
}

TEST_CASE("rhs agrees with a refined evaluation", "[equation]") {
  auto u_of = [](double x) { return 0.1 * std::sin(2 * pi * x / 40.0); };
  PeriodicGrid coarse(40.0, 512), fine(40.0, 4096);
  const auto rc = rhs(sample(coarse, u_of), {});
  const auto rf = rhs(sample(fine, u_of), {});
  double worst = 0.0;
  for (std::size_t j = 0; j < coarse.size(); ++j) worst = std::max(worst, std::abs(rc[j] - rf[8 * j]));
  CHECK(worst < 1e-10);
}

TEST_CASE("rhs of a single mode matches the hand-computed form", "[equation]") {
  // u = eps sin x on L = 2 pi. Then u u_x = eps^2 sin(2x)/2 and the source
  // u^2 + u_x^2/2 + u^3 - 3/2 u^2 expands to a few modes; apply ik/(1+k^2) by hand.
  PeriodicGrid g(2 * pi, 64);
  const double e = 0.3;
  const auto u = sample(g, [&](double x) { return e * std::sin(x); });
  const auto r = rhs(u, {0.25, false});
  const auto expected = sample(g, [&](double x) {
    // source = e^2 sin^2 + e^2 cos^2 / 2 + e^3 sin^3 - 3/2 e^2 sin^2
    //        = e^2 (cos^2/2 - sin^2/2) + e^3 (3 sin x - sin 3x)/4
    //        = e^2 cos(2x)/2 + e^3 (3 sin x - sin 3x)/4
    // d/dx Lambda^{-2}: cos(2x) -> -2 sin(2x)/5, sin x -> cos x/2, sin 3x -> 3 cos(3x)/10
    const double dsrc = e * e / 2 * (-2.0 * std::sin(2 * x) / 5.0) +
                        e * e * e / 4 * (3.0 * std::cos(x) / 2.0 - 3.0 * std::cos(3 * x) / 10.0);
    return -e * e * std::sin(2 * x) / 2.0 - dsrc - 0.25 * e * std::sin(x);
  });
  CHECK(max_abs_diff(r, expected) < 1e-14);
}

TEST_CASE("non-finite state reports blow-up", "[equation]") {
  PeriodicGrid g(10.0, 32);
  GridField u(g);
  u[5] = INFINITY;
  CHECK_THROWS_WITH(rhs(u, {}), "blow-up detected in RHS");
  CHECK_THROWS_AS(residual_local_form(u, u, {}), NumericalError);
  CHECK_THROWS_AS(residual_m_form(u, u, {}), NumericalError);
}

TEST_CASE("residual forms vanish on trivial states", "[equation]") {
  PeriodicGrid g(10.0, 32);
  const GridField z(g);
  CHECK(max_abs(residual_local_form(z, z, {})) == 0.0);
  CHECK(max_abs(residual_m_form(z, z, {})) == 0.0);
  const double lambda = 0.6, c = -0.8;
  const auto u = sample(g, [&](double) { return c; });
  const auto ut = sample(g, [&](double) { return -lambda * c; });
  CHECK(max_abs(residual_local_form(u, ut, {lambda})) < 1e-15);
  CHECK(max_abs(residual_m_form(u, ut, {lambda})) < 1e-15);
}

TEST_CASE("nonlocal rhs satisfies the local third-order form", "[equation][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    // 16 modes on n = 128 keeps every product below the Nyquist mode.
    PeriodicGrid g(2 * pi * (1 + trial % 3), 128);
    const auto u = random_band_limited(g, rng, 12, 0.8);
    const EquationParams p{0.1 * (trial % 4), false};
    const auto ut = rhs(u, p);
    const double scale = local_scale(u, ut);
    const auto rl = residual_local_form(u, ut, p);
    const auto rm = residual_m_form(u, ut, p);
    CHECK(max_abs(rl) < 1e-8 * scale);
    CHECK(max_abs(rl) < 1e-12 * scale);
    CHECK(max_abs_diff(rl, rm) < 1e-10);
  }
}

TEST_CASE("dealiased rhs on a band-limited state changes nothing below the cutoff", "[equation]") {
  // Products of a 5-mode field reach at most mode 20, below n/3 = 42 on n = 128.
  std::mt19937_64 rng(11);
  PeriodicGrid g(2 * pi, 128);
  const auto u = random_band_limited(g, rng, 5);
  CHECK(max_abs_diff(rhs(u, {0.0, true}), rhs(u, {0.0, false})) < 1e-13);
}

TEST_CASE("translation equivariance on grid shifts", "[equation][property]") {
  std::mt19937_64 rng(3);
  PeriodicGrid g(40.0, 256);
  const auto u = gaussian(g, 0.7, 1.5, 2.0) + 0.1 * random_band_limited(g, rng, 10);
  for (long a : {1L, 7L, -19L, 128L})
    for (bool dealias : {false, true}) {
      const EquationParams p{0.2, dealias};
      const auto lhs = rhs(shift(u, a), p);
      const auto rhs_shifted = shift(rhs(u, p), a);
      CHECK(max_abs_diff(lhs, rhs_shifted) < 1e-13 * (1 + max_abs(lhs)));
    }
}

TEST_CASE("rhs is affine in lambda", "[equation][property]") {
  std::mt19937_64 rng(5);
  PeriodicGrid g(20.0, 128);
  const auto u = random_band_limited(g, rng, 15);
  for (auto [l1, l2] : {std::pair{0.0, 0.5}, std::pair{1.3, -0.4}, std::pair{7.0 / 3.0, 1.0}}) {
    const auto d = rhs(u, {l1, false}) - rhs(u, {l2, false});
    CHECK(max_abs_diff(d, -(l1 - l2) * u) < 1e-14 * (1 + max_abs(u)));
  }
}
