#include <cmath>
#include <numbers>
#include <random>

#include <catch_amalgamated.hpp>

#include "chbreak/breaking.hpp"
#include "chbreak/elliptic.hpp"
#include "chbreak/timestepper.hpp"
#include "test_support.hpp"

using namespace chbreak;
using chbreak::testing::gaussian;
using Catch::Approx;

namespace {
constexpr double pi = std::numbers::pi;

// ||A exp(-(x/w)^2)||_{H^1} from closed-form Gaussian moments.
double gaussian_h1(double A, double w) {
  return std::sqrt(A * A * std::sqrt(pi / 2) * (w + 1.0 / w));
}

// Exact derivative sampled on the grid, minimized there: the grid argmin oracle.
std::pair<double, double> gaussian_grid_min_slope(const PeriodicGrid& g, double A, double w) {
  double best = 0.0, where = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j);
    const double d = -2.0 * x / (w * w) * A * std::exp(-(x / w) * (x / w));
    if (d < best) {
      best = d;
      where = x;
    }
  }
  return {best, where};
}

StepControl breaking_control() {
  StepControl c;
  c.cfl = 0.3;
  c.dt_max = 0.05;
  c.slope_ceiling = 12.0;
  c.dt_min = c.cfl / c.slope_ceiling;
  c.t_end = 5.0;
  c.record_every = 0.002;
  return c;
}
}  // namespace

TEST_CASE("psi examples", "[breaking]") {
  CHECK(psi_from_norm(0.0) == 0.0);
  CHECK(psi(GridField(PeriodicGrid(10.0, 32))) == 0.0);
  CHECK(psi_from_norm(1.0) == Approx(std::sqrt(2.0) / 2 + 0.25).epsilon(1e-15));
  CHECK(psi_from_norm(1.0) == Approx(0.95711).margin(1e-5));
  const double a = gaussian_h1(1.0, 1.0);
  CHECK(a == Approx(1.5833).margin(1e-4));
  CHECK(psi(gaussian(PeriodicGrid(40.0, 512))) ==
        Approx(std::sqrt(2.0) / 2 * a * a * a + a * a / 4).epsilon(1e-12));
}

TEST_CASE("epsilon0 formula", "[breaking]") {
  // s0^2 = 2 sqrt(2) a^3 + a^2 gives 1/2
  for (double a : {0.5, 1.0, 3.0}) {
    const double s0 = -std::sqrt(2 * std::sqrt(2.0) * a * a * a + a * a);
    CHECK(epsilon0_from(a, s0) == Approx(0.5).epsilon(1e-14));
  }
  CHECK(epsilon0_from(1.0, -1e8) == Approx(1.0).epsilon(1e-14));
  CHECK(epsilon0_from(2.0, -0.1) < 0.0);  // reported, not clamped
  CHECK_THROWS_AS(epsilon0_from(1.0, 0.0), DegenerateDataError);
  CHECK_THROWS_WITH(epsilon0(GridField(PeriodicGrid(10.0, 64))), "degenerate: constant initial data");
  CHECK_THROWS_AS(epsilon0(sample(PeriodicGrid(10.0, 64), [](double) { return 2.0; })),
                  DegenerateDataError);
}

TEST_CASE("breaking seed constants against quadrature and argmin oracles", "[breaking]") {
  const double A = 1.0, w = 0.1;
  PeriodicGrid g(40.0, 2048);
  const auto u0 = gaussian(g, A, w);
  const auto f = forecast(u0, 0.0);
  const double a = gaussian_h1(A, w);
  const auto [s0, x0] = gaussian_grid_min_slope(g, A, w);
  CHECK(f.a == Approx(a).epsilon(1e-12));
  CHECK(f.s0 == Approx(s0).epsilon(1e-10));
  CHECK(f.x0 == x0);
  CHECK(f.y0 == f.s0);
  const double eps = 1.0 - (2 * std::sqrt(2.0) * a * a * a + a * a) / (2 * s0 * s0);
  CHECK(f.eps0 == Approx(eps).epsilon(1e-9));
  CHECK(f.condition_holds);
  CHECK(s0 < -std::sqrt(std::sqrt(2.0) * a * a * a + a * a / 2));
  CHECK(f.lambda0 == Approx(-eps * s0 / 4).epsilon(1e-9));
  CHECK(f.t_plus == Approx(-8.0 / (eps * s0)).epsilon(1e-9));
  CHECK(std::isfinite(f.t_plus));
}

TEST_CASE("t_plus examples", "[breaking]") {
  CHECK(t_plus(0.5, -2.0, 0.0) == Approx(8.0).epsilon(1e-15));
  CHECK(t_plus(0.5, -2.0, 0.1) == Approx(10.0 * std::log(5.0 / 3.0)).epsilon(1e-14));
  CHECK(t_plus(0.5, -2.0, 0.1) == Approx(5.1083).margin(1e-4));
  // The logarithmic branch tends to -4/(eps0 y0) as lambda -> 0+; the
  // lambda = 0 branch -8/(eps0 y0) is the looser of the two bounds.
  CHECK(std::abs(t_plus(0.5, -2.0, 1e-8) - 4.0) < 1e-5);
  // series oracle: -(1/l) log(1 + x), x = 4 l/(eps0 y0) = -4 l
  for (double l : {1e-3, 1e-4}) {
    const double x = -4.0 * l;
    CHECK(t_plus(0.5, -2.0, l) == Approx(-(x - x * x / 2 + x * x * x / 3 - x * x * x * x / 4) / l).epsilon(1e-9));
  }
  CHECK(t_plus(0.5, -2.0, 1e-8) < t_plus(0.5, -2.0, 0.0));
  CHECK_THROWS_AS(t_plus(0.5, -2.0, 0.25), std::domain_error);
  CHECK_THROWS_AS(t_plus(0.5, -2.0, -0.1), std::domain_error);
  CHECK_THROWS_WITH(t_plus(1.2, -2.0, 0.0), "breaking threshold violated: eps0 must lie in (0, 1)");
  CHECK_THROWS_WITH(t_plus(0.5, -2.0, 0.3), "dissipation outside the admissible range [0, lambda0)");
  CHECK_THROWS_AS(t_plus(0.0, -2.0, 0.0), std::domain_error);
}

TEST_CASE("t_plus is increasing in lambda and diverges at lambda0", "[breaking][property]") {
  const double eps = 0.3, y0 = -5.0;
  const double lam0 = lambda0_from(eps, y0);
  double prev = t_plus(eps, y0, lam0 * 1e-9);
  for (int i = 1; i < 200; ++i) {
    const double l = lam0 * i / 200.0;
    const double t = t_plus(eps, y0, l);
    CHECK(t > prev);
    prev = t;
  }
  // T+ ~ log(1/delta)/lambda0 at lambda = lambda0 (1 - delta): unbounded
  for (double delta : {1e-3, 1e-6, 1e-9}) {
    const double l = lam0 * (1 - delta);
    CHECK(t_plus(eps, y0, l) == Approx(std::log(1 / delta) / l).epsilon(1e-5));
  }
}

TEST_CASE("forecast on trivial and gentle data", "[breaking]") {
  PeriodicGrid g(40.0, 512);
  CHECK_THROWS_AS(forecast(GridField(g), 0.0), DegenerateDataError);
  const auto f = forecast(gaussian(g, 0.1), 0.0);
  CHECK_FALSE(f.condition_holds);
  CHECK(f.t_plus == kInfinity);
  CHECK(f.eps0 < 0.0);
  CHECK(f.ratio == Approx(1.0 - f.eps0));
  // dissipation at or above lambda0 gives no bound
  const auto seed = gaussian(PeriodicGrid(40.0, 2048), 1.0, 0.1);
  const auto f0 = forecast(seed, 0.0);
  CHECK(forecast(seed, f0.lambda0).t_plus == kInfinity);
  CHECK(std::isfinite(forecast(seed, 0.5 * f0.lambda0).t_plus));
}

TEST_CASE("condition implies admissible constants", "[breaking][property]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> amp(0.3, 3.0), width(0.03, 0.3), centre(-5.0, 5.0);
  PeriodicGrid g(40.0, 2048);
  int holding = 0;
  for (int attempt = 0; attempt < 5000 && holding < 100; ++attempt) {
    const double A = amp(rng), w = width(rng), c = centre(rng);
    const auto u0 = gaussian(g, A, w, c) + gaussian(g, 0.3 * A, 2.0 * w, c + 1.0);
    const auto f = forecast(u0, 0.0);
    if (!f.condition_holds) continue;
    ++holding;
    CHECK(f.y0 < 0.0);
    CHECK(f.eps0 > 0.0);
    CHECK(f.eps0 < 1.0);
    CHECK(f.lambda0 > 0.0);
    CHECK(f.t_plus > 0.0);
  }
  CHECK(holding == 100);
}

TEST_CASE("sub-grid min slope matches the analytic minimum", "[breaking]") {
  const double w = 0.1;
  PeriodicGrid g(40.0, 2048);
  const auto u0 = gaussian(g, 1.0, w, 0.0123);
  const double exact = -std::sqrt(2.0) * std::exp(-0.5) / w;
  const auto grid = min_slope(u0);
  const auto fine = min_slope(u0, 0.0, true);
  CHECK(fine.y <= grid.y);
  CHECK(fine.y == Approx(exact).epsilon(1e-10));
  CHECK(fine.xi == Approx(0.0123 + w / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("riccati audit on synthetic series", "[breaking]") {
  CHECK_THROWS_AS(riccati_audit({{0, 0, 0}, {1, 0, 0}}, 0.0, 1.0), std::invalid_argument);
  std::vector<MinSlopeSample> zero, flat;
  for (int i = 0; i < 10; ++i) {
    zero.push_back({0.1 * i, 0.0, 0.0});
    flat.push_back({0.1 * i, -3.0, 0.0});
  }
  const double psi_v = 2.0;
  CHECK(riccati_audit(zero, 0.0, psi_v).max_violation == Approx(-psi_v));
  CHECK(riccati_audit(zero, 0.0, psi_v).compliant());
  const double lam = 0.4;
  CHECK(riccati_audit(flat, lam, psi_v).max_violation == Approx(lam * -3.0 + 4.5 - psi_v));
  CHECK_FALSE(riccati_audit(flat, lam, psi_v).compliant());
  CHECK(riccati_audit(flat, lam, 10.0).compliant());

  // Exact Riccati solution y' = -y^2/2 (psi = 0, lambda = 0): y = 2 / (t - 2/|y0|... )
  std::vector<MinSlopeSample> ric;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.01 * i;
    ric.push_back({t, -2.0 / (1.0 - t), 0.0});  // y(0) = -2, blow-up at t = 1
  }
  const auto audit_exact = riccati_audit(ric, 0.0, 0.0);
  CHECK(std::abs(audit_exact.max_violation) < 1e-2);
  CHECK(audit_exact.compliant());
}

TEST_CASE("min-slope tracking on trivial and rigid solutions", "[breaking]") {
  PeriodicGrid g(40.0, 64);
  StepControl c;
  c.t_end = 0.1;
  const auto zero = track_min_slope(integrate(GridField(g), {}, c));
  for (const auto& s : zero) CHECK(s.y == 0.0);

  const auto wave = fit_traveling_wave(2 * pi, 0.5);
  PeriodicGrid gw(2 * pi, 512);
  StepControl cw;
  cw.t_end = 1.0;
  cw.record_every = 0.1;
  const auto tr = integrate(snoidal_profile(wave, gw), {}, cw);
  const auto series = track_min_slope(tr, true);
  for (const auto& s : series) CHECK(std::abs(s.y - series.front().y) < 1e-6);
}

TEST_CASE("breaking seed run: detection before the bound and Riccati compliance", "[breaking][slow]") {
  PeriodicGrid g(40.0, 2048);
  const auto u0 = gaussian(g, 1.0, 0.1);
  const auto f = forecast(u0, 0.0);
  REQUIRE(f.condition_holds);
  const auto tr = integrate(u0, {0.0, true}, breaking_control());
  REQUIRE(tr.termination == Termination::breaking_detected);
  CHECK(tr.final_time() < f.t_plus);

  const auto series = track_min_slope(tr, true);
  std::vector<MinSlopeSample> window;
  for (const auto& s : series)
    if (s.t <= 0.9 * tr.final_time()) window.push_back(s);
  CHECK(riccati_audit(window, 0.0, f.psi).compliant());
  // the slope steepens monotonically
  for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i].y < series[i - 1].y);
  CHECK(pointwise_bound_ratio(tr, 0.0, f.a) <= 1.0 + 1e-6);
}

TEST_CASE("pointwise bound along a dissipative smooth run", "[breaking]") {
  PeriodicGrid g(40.0, 512);
  const auto u0 = gaussian(g, 0.8, 1.3);
  StepControl c;
  c.t_end = 1.0;
  c.record_every = 0.05;
  const double lam = 0.3;
  const auto tr = integrate(u0, {lam, true}, c);
  CHECK(pointwise_bound_ratio(tr, lam, sobolev_norm(u0, 1.0)) <= 1.0 + 1e-6);
}
