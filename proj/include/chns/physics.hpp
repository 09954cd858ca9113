// Material laws, the relaxed double-obstacle free energy with its
// convex/concave splitting, the wind volume force and the initial phase
// profile of the wave scenario.
#pragma once

#include <cmath>

#include "chns/geometry.hpp"

namespace chns {

struct MaterialParams {
  double rho1 = 0.01;   // lighter fluid (phase -1)
  double rho2 = 1.0;    // heavier fluid (phase +1)
  double eta1 = 1e-4;   // viscosity at phase -1
  double eta2 = 0.01;   // viscosity at phase +1
  double sigma = 0.00032;
  double epsilon = 0.02;
  double s = 1e4;       // Moreau-Yosida relaxation parameter
  double mobility = 0.125;  // constant b; scenario default eps/(500 sigma)
  Vec2 gravity{0.0, -9.81};

  void validate() const;

  double density(double phi) const { return 0.5 * ((rho2 - rho1) * phi + (rho1 + rho2)); }
  double d_density_dphi() const { return 0.5 * (rho2 - rho1); }

  // affine in phi, clamped so relaxation overshoot cannot leave the
  // physical viscosity range
  double viscosity(double phi) const {
    const double lo = std::min(eta1, eta2), hi = std::max(eta1, eta2);
    const double v = eta1 + 0.5 * (eta2 - eta1) * (phi + 1.0);
    return std::min(hi, std::max(lo, v));
  }

  double mobility_of(double /*phi*/) const { return mobility; }

  double min_viscosity() const { return std::min(eta1, eta2); }
};

// lambda(phi) = max(0, phi-1) + min(0, phi+1): the constraint violation
inline double obstacle_lambda(double phi) {
  return std::max(0.0, phi - 1.0) + std::min(0.0, phi + 1.0);
}

// F = F+ + F-, F+(phi) = s/2 lambda(phi)^2 convex, F-(phi) = (1 - phi^2)/2
// concave; F+' = s lambda is piecewise linear and semismooth.
inline double f_plus(double phi, double s) {
  const double l = obstacle_lambda(phi);
  return 0.5 * s * l * l;
}
inline double f_plus_prime(double phi, double s) { return s * obstacle_lambda(phi); }
inline double f_minus(double phi) { return 0.5 * (1.0 - phi * phi); }
inline double f_minus_prime(double phi) { return -phi; }
inline double free_energy(double phi, double s) { return f_plus(phi, s) + f_minus(phi); }

// Truncated cosine bell f = (f1, 0); the displayed formula is kept verbatim
// (it jumps at the support boundary); `smooth` switches to cos^2(pi r / 2).
struct WindForce {
  Vec2 center{1.0, 0.7};
  Vec2 halfaxes{1.0, 0.1};
  double amplitude = 1.0;
  bool smooth = false;

  Vec2 operator()(const Vec2& x) const {
    const double rx = (x.x - center.x) / halfaxes.x;
    const double ry = (x.y - center.y) / halfaxes.y;
    const double r = std::sqrt(rx * rx + ry * ry);
    if (r >= 1.0) return {0.0, 0.0};
    const double c = smooth ? std::cos(0.5 * M_PI * r) : std::cos(M_PI * r);
    return {amplitude * c * c, 0.0};
  }
};

// First-order equilibrium profile through the relaxed double-obstacle
// energy: sine core for |z| <= z0 = arctan(sqrt(s-1)), exponential tails
// approaching +-s/(s-1) beyond.
double initial_phase_profile(double z, double s);

// Signed distance-like coordinate of the wave scenario: positive below the
// surface line x2 = mean_height + amplitude sin(2 pi x1), so that phase +1
// (the heavier fluid) fills the lower part of the domain.
inline double wave_coordinate(const Vec2& x, double mean_height, double amplitude,
                              double epsilon) {
  return (mean_height + amplitude * std::sin(2.0 * M_PI * x.x) - x.y) / epsilon;
}

}  // namespace chns
