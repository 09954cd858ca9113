#include <doctest.h>

#include <cmath>
#include <random>

#include "chns/physics.hpp"

using namespace chns;

TEST_CASE("density endpoints and midpoint") {
  MaterialParams p;
  p.rho1 = 0.01;
  p.rho2 = 1.0;
  CHECK(p.density(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.density(-1.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(p.density(0.0) == doctest::Approx(0.505).epsilon(1e-15));
  CHECK(p.d_density_dphi() == doctest::Approx(0.495).epsilon(1e-15));
}

TEST_CASE("density is affine") {
  MaterialParams p;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const double a = uni(rng), b = uni(rng);
    CHECK(p.density(0.5 * (a + b)) ==
          doctest::Approx(0.5 * (p.density(a) + p.density(b))).epsilon(1e-14));
  }
}

TEST_CASE("free energy values and splitting") {
  CHECK(free_energy(0.0, 1e4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f_plus_prime(0.0, 1e4) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(free_energy(1.0, 1e4) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(free_energy(-1.0, 1e4) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(obstacle_lambda(1.0) == 0.0);
  CHECK(obstacle_lambda(-1.0) == 0.0);

  // s = 1e4, phi = 1.01: F = (1 - 1.0201 + 1e4 * 1e-4) / 2 = 0.48995, F+' = 100
  CHECK(free_energy(1.01, 1e4) == doctest::Approx(0.48995).epsilon(1e-12));
  CHECK(f_plus_prime(1.01, 1e4) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("F = F+ + F- identically") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double phi = uni(rng);
    const double s = 1e4;
    CHECK(std::abs(free_energy(phi, s) - (f_plus(phi, s) + f_minus(phi))) < 1e-14 *
              (1.0 + std::abs(free_energy(phi, s))));
  }
}

TEST_CASE("F+ convexity via second divided differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-1.5, 1.5);
  const double s = 1e4;
  for (int i = 0; i < 1000; ++i) {
    double a = uni(rng), b = uni(rng), c = uni(rng);
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    if (c - a < 1e-8) continue;
    const double d1 = (f_plus(b, s) - f_plus(a, s)) / (b - a + 1e-300);
    const double d2 = (f_plus(c, s) - f_plus(b, s)) / (c - b + 1e-300);
    CHECK((d2 - d1) / (c - a) >= -1e-12 * s);
  }
}

TEST_CASE("F+' matches a finite difference away from the kinks") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.6, 1.6);
  const double s = 1e4, h = 1e-7;
  int checked = 0;
  for (int i = 0; i < 2000 && checked < 1000; ++i) {
    const double phi = uni(rng);
    if (std::abs(std::abs(phi) - 1.0) < 10.0 * h) continue;
    ++checked;
    const double fd = (f_plus(phi + h, s) - f_plus(phi - h, s)) / (2.0 * h);
    const double ex = f_plus_prime(phi, s);
    CHECK(fd == doctest::Approx(ex).epsilon(1e-6).scale(1.0 + std::abs(ex)));
  }
  CHECK(checked == 1000);
}

TEST_CASE("viscosity endpoints and clamping") {
  MaterialParams p;
  p.eta1 = 1e-4;
  p.eta2 = 0.01;
  CHECK(p.viscosity(-1.0) == doctest::Approx(1e-4).epsilon(1e-14));
  CHECK(p.viscosity(1.0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(p.viscosity(3.0) == doctest::Approx(0.01).epsilon(1e-14));   // clamped
  CHECK(p.viscosity(-3.0) == doctest::Approx(1e-4).epsilon(1e-14));  // clamped
}

TEST_CASE("scenario mobility value") {
  // b = eps / (500 sigma) with eps = 0.02 and sigma = 0.00032 gives 0.125
  CHECK(0.02 / (500.0 * 0.00032) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("wind force: center, support and bound") {
  WindForce w;
  w.center = {1.0, 1.2};
  w.halfaxes = {1.0, 0.1};
  CHECK(w({1.0, 1.2}).x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w({1.0, 1.2}).y == 0.0);
  // twice the half-axis: outside
  CHECK(w({3.0, 1.2}).x == 0.0);
  // exactly on the boundary of the support: the zero branch
  CHECK(w({1.0, 1.3}).x == 0.0);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(-1.0, 3.0), uy(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 x{ux(rng), uy(rng)};
    const Vec2 f = w(x);
    CHECK(f.y == 0.0);
    CHECK(f.x >= 0.0);
    CHECK(f.x <= 1.0 + 1e-15);
    const double rx = (x.x - w.center.x) / w.halfaxes.x;
    const double ry = (x.y - w.center.y) / w.halfaxes.y;
    if (rx * rx + ry * ry >= 1.0) CHECK(f.x == 0.0);
  }
}

TEST_CASE("initial profile: zero, branch agreement, tail") {
  CHECK(initial_phase_profile(0.0, 1e4) == 0.0);

  for (double s : {1e2, 1e3, 1e4}) {
    const double z0 = std::atan(std::sqrt(s - 1.0));
    const double sine = std::sqrt(s / (s - 1.0)) * std::sin(z0);
    const double expb = (s - std::exp(std::sqrt(s - 1.0) * (z0 - z0))) / (s - 1.0);
    CHECK(sine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expb == doctest::Approx(1.0).epsilon(1e-12));
    // continuity across both kinks
    for (double sign : {1.0, -1.0}) {
      const double a = initial_phase_profile(sign * (z0 - 1e-12), s);
      const double b = initial_phase_profile(sign * (z0 + 1e-12), s);
      CHECK(std::abs(a - b) <= 1e-9);
    }
  }

  // far tail for s = 1e4 approaches s/(s-1) from below, stays in (1, 1.0002)
  const double s = 1e4;
  const double z0 = std::atan(std::sqrt(s - 1.0));
  const double tail = initial_phase_profile(10.0 * z0, s);
  CHECK(tail > 1.0);
  CHECK(tail < 1.0002);
  CHECK(initial_phase_profile(-10.0 * z0, s) == doctest::Approx(-tail).epsilon(1e-13));
}

TEST_CASE("profile range stays within the relaxed bounds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uz(-50.0, 50.0);
  for (double s : {1e2, 1e3, 1e4}) {
    const double bound = s / (s - 1.0);
    for (int i = 0; i < 500; ++i) {
      const double v = initial_phase_profile(uz(rng), s);
      CHECK(std::abs(v) <= bound + 1e-13);
    }
  }
}

TEST_CASE("parameter validation") {
  MaterialParams p;
  p.rho1 = 2.0;  // violates rho1 <= rho2
  CHECK_THROWS(p.validate());
  p = MaterialParams{};
  p.s = 0.5;
  CHECK_THROWS(p.validate());
  p = MaterialParams{};
  CHECK_NOTHROW(p.validate());
}
