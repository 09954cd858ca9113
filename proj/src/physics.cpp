#include "chns/physics.hpp"

#include <stdexcept>

namespace chns {

void MaterialParams::validate() const {
  if (!(rho1 > 0.0) || !(rho1 <= rho2)) throw std::invalid_argument("params: need 0 < rho1 <= rho2");
  if (!(eta1 > 0.0) || !(eta2 > 0.0)) throw std::invalid_argument("params: viscosities must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("params: sigma must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("params: epsilon must be positive");
  if (!(s > 1.0)) throw std::invalid_argument("params: s must exceed 1");
  if (!(mobility > 0.0)) throw std::invalid_argument("params: mobility must be positive");
}

double initial_phase_profile(double z, double s) {
  if (!(s > 1.0)) throw std::invalid_argument("initial_phase_profile: s must exceed 1");
  const double sq = std::sqrt(s - 1.0);
  const double z0 = std::atan(sq);
  if (std::abs(z) <= z0) return std::sqrt(s / (s - 1.0)) * std::sin(z);
  if (z > z0) return (s - std::exp(sq * (z0 - z))) / (s - 1.0);
  return -(s - std::exp(sq * (z0 + z))) / (s - 1.0);
}

}  // namespace chns
