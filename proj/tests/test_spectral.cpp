#include <cmath>
#include <numbers>
#include <random>

#include <catch_amalgamated.hpp>

#include "chbreak/spectral.hpp"
#include "test_support.hpp"

using namespace chbreak;
using chbreak::testing::gaussian;
using chbreak::testing::max_abs_diff;
using chbreak::testing::random_band_limited;
using Catch::Approx;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("grid construction rejects bad sizes", "[spectral]") {
  CHECK_THROWS_AS(PeriodicGrid(1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(PeriodicGrid(1.0, 24), std::invalid_argument);
  CHECK_THROWS_AS(PeriodicGrid(-1.0, 32), std::invalid_argument);
  PeriodicGrid g(40.0, 512);
  CHECK(g.dx() * 512 == Approx(40.0).epsilon(1e-15));
  CHECK(g.x(0) == -20.0);
  CHECK(g.x(511) == Approx(20.0 - g.dx()));
}

TEST_CASE("spectral derivative examples", "[spectral]") {
  PeriodicGrid g(2 * pi, 64);
  const auto s = sample(g, [](double x) { return std::sin(x); });
  const auto c = sample(g, [](double x) { return std::cos(x); });
  CHECK(max_abs_diff(spectral_derivative(s, 1), c) < 1e-13);

  const auto k = sample(g, [](double) { return 3.7; });
  for (int order = 1; order <= 4; ++order) CHECK(max_abs(spectral_derivative(k, order)) < 1e-13);

  PeriodicGrid big(40.0, 512);
  const auto gau = gaussian(big);
  const auto exact = sample(big, [](double x) { return -2.0 * x * std::exp(-x * x); });
  CHECK(max_abs_diff(spectral_derivative(gau, 1), exact) < 1e-10);
}

TEST_CASE("odd derivative drops the Nyquist mode", "[spectral]") {
  PeriodicGrid g(2 * pi, 16);
  // cos(8x) sampled at x_j is (-1)^j, pure Nyquist content.
  const auto nyq = sample(g, [](double x) { return std::cos(8.0 * x); });
  CHECK(max_abs(spectral_derivative(nyq, 1)) < 1e-13);
  CHECK(max_abs_diff(spectral_derivative(nyq, 2), -64.0 * nyq) < 1e-10);
}

TEST_CASE("non-finite input is rejected", "[spectral]") {
  PeriodicGrid g(2 * pi, 32);
  GridField f(g);
  f[3] = std::nan("");
  CHECK_THROWS_AS(spectral_derivative(f, 1), NumericalError);
  CHECK_THROWS_AS(helmholtz_inverse(f), NumericalError);
  CHECK_THROWS_AS(helmholtz_apply(f), NumericalError);
  CHECK_THROWS_AS(quadrature(f), NumericalError);
  CHECK_THROWS_AS(sobolev_norm(f, 1.0), NumericalError);
  f[3] = INFINITY;
  CHECK_THROWS_WITH(spectral_derivative(f, 1), "non-finite field");
}

TEST_CASE("Helmholtz operator and inverse", "[spectral]") {
  PeriodicGrid g(2 * pi, 64);
  const auto c = sample(g, [](double x) { return std::cos(x); });
  CHECK(max_abs_diff(helmholtz_inverse(c), 0.5 * c) < 1e-14);
  CHECK(max_abs_diff(helmholtz_apply(c), 2.0 * c) < 1e-12);
  const auto k = sample(g, [](double) { return -1.25; });
  CHECK(max_abs_diff(helmholtz_inverse(k), k) < 1e-14);
  CHECK(max_abs_diff(helmholtz_apply(k), k) < 1e-14);

  PeriodicGrid big(40.0, 512);
  const auto gau = gaussian(big);
  // (1 - d^2/dx^2) e^{-x^2} = e^{-x^2} - (4x^2 - 2) e^{-x^2}
  const auto exact =
      sample(big, [](double x) { return std::exp(-x * x) - (4 * x * x - 2) * std::exp(-x * x); });
  CHECK(max_abs_diff(helmholtz_apply(gau), exact) < 1e-9);
}

TEST_CASE("Helmholtz inverse is the periodized exp(-|x|)/2 kernel", "[spectral]") {
  // Direct periodic convolution with the Green's function as an independent route.
  PeriodicGrid g(20.0, 256);
  const auto f = gaussian(g, 1.0, 0.7, 1.0);
  const auto viaFourier = helmholtz_inverse(f);
  const double L = g.length();
  // Periodized kernel sum_m exp(-|x + mL|)/2 = cosh(|x| - L/2) / (2 sinh(L/2)), |x| <= L/2
  auto kernel = [&](double d) {
    double r = std::fmod(std::abs(d), L);
    if (r > L / 2) r = L - r;
    return std::cosh(r - L / 2) / (2.0 * std::sinh(L / 2));
  };
  // The kernel has a slope jump at 0, so the rectangle rule applied to it is
  // only second order; compare on a finely resampled source.
  const int refine = 16;
  const double h = g.dx() / refine;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); i += 16) {
    double acc = 0.0;
    for (int q = 0; q < static_cast<int>(g.size()) * refine; ++q) {
      const double y = -L / 2 + q * h;
      const double s = (y - 1.0) / 0.7;
      const double kv0 = kernel(g.x(i) - y);
      acc += h * kv0 * std::exp(-s * s);
    }
    worst = std::max(worst, std::abs(acc - viaFourier[i]));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("quadrature examples", "[spectral]") {
  PeriodicGrid g(7.0, 64);
  CHECK(quadrature(sample(g, [](double) { return 2.5; })) == Approx(2.5 * 7.0).epsilon(1e-15));
  CHECK(std::abs(quadrature(sample(g, [&](double x) { return std::sin(2 * pi * x / 7.0); }))) < 1e-14);
  PeriodicGrid big(40.0, 512);
  CHECK(std::abs(quadrature(gaussian(big)) - std::sqrt(pi)) < 1e-12);
}

TEST_CASE("Sobolev norm examples", "[spectral]") {
  PeriodicGrid g(2 * pi, 64);
  CHECK(sobolev_norm(sample(g, [](double x) { return std::sin(x); }), 1.0) ==
        Approx(std::sqrt(2 * pi)).epsilon(1e-14));
  const auto k = sample(g, [](double) { return -3.0; });
  for (double s : {0.0, 0.5, 1.0, 3.0})
    CHECK(sobolev_norm(k, s) == Approx(3.0 * std::sqrt(2 * pi)).epsilon(1e-14));
  CHECK_THROWS_AS(sobolev_norm(k, -0.5), std::invalid_argument);

  // ||e^{-x^2}||_{L2}^2 = ||(e^{-x^2})'||_{L2}^2 = sqrt(pi/2)
  PeriodicGrid big(40.0, 512);
  CHECK(sobolev_norm(gaussian(big), 1.0) == Approx(std::sqrt(std::sqrt(2 * pi))).epsilon(1e-12));
  CHECK(sobolev_norm(gaussian(big), 1.0) == Approx(1.5833).margin(1e-4));
}

TEST_CASE("spectral identities on random smooth fields", "[spectral][property]") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 50; ++trial) {
    const double L = 5.0 + trial;
    PeriodicGrid g(L, 128);
    const auto f = random_band_limited(g, rng, 20);
    const auto h = random_band_limited(g, rng, 20);

    // Parseval
    const double l2 = sobolev_norm(f, 0.0);
    CHECK(l2 * l2 == Approx(quadrature(hadamard(f, f))).epsilon(1e-12));

    // H^1 norm matches the physical-space integral
    const auto fx = spectral_derivative(f, 1);
    const double h1sq = quadrature(hadamard(f, f)) + quadrature(hadamard(fx, fx));
    CHECK(std::pow(sobolev_norm(f, 1.0), 2) == Approx(h1sq).epsilon(1e-12));

    // Helmholtz round trip
    const auto back = helmholtz_apply(helmholtz_inverse(f));
    CHECK(max_abs_diff(back, f) <= 1e-12 * max_abs(f));

    // linearity of D
    const double a = 0.3 + trial * 0.01, b = -1.7;
    const auto lhs = spectral_derivative(a * f + b * h, 1);
    const auto rhs = a * spectral_derivative(f, 1) + b * spectral_derivative(h, 1);
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * (max_abs(lhs) + 1.0));

    // periodic total derivative integrates to zero
    CHECK(std::abs(quadrature(fx)) <= 1e-12 * sobolev_norm(f, 0.0));

    // fused d/dx Lambda^{-2}
    CHECK(max_abs_diff(dx_helmholtz_inverse(f), spectral_derivative(helmholtz_inverse(f), 1)) <
          1e-13 * (1.0 + max_abs(f)));
  }
}

TEST_CASE("shift and dealias", "[spectral]") {
  PeriodicGrid g(2 * pi, 32);
  const auto f = sample(g, [](double x) { return std::sin(x); });
  const auto s = shift(f, 3);
  CHECK(s[3] == f[0]);
  CHECK(s[0] == f[29]);
  CHECK(max_abs_diff(shift(s, -3), f) == 0.0);

  const auto high = sample(g, [](double x) { return std::cos(2 * x) + std::cos(13 * x); });
  const auto low = sample(g, [](double x) { return std::cos(2 * x); });
  CHECK(max_abs_diff(dealias(high), low) < 1e-14);
}
