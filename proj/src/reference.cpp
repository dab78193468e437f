#include "ttfs/reference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ttfs {

void ReferenceParams::validate() const {
  if (!(a >= 0.0) || !(l0 > 0.0) || !(t_final > 0.0) || !std::isfinite(spin_rate)) {
    throw std::invalid_argument("ReferenceParams: need a >= 0, l0 > 0, t_final > 0");
  }
}

TetherReference desired_tether(double t, const ReferenceParams& rp) {
  if (t < 0.0) throw std::invalid_argument("desired_tether: t must be >= 0");
  return {rp.l0 + rp.a * t, rp.a};
}

TetherState desired_tether_state(double t, const ReferenceParams& rp) {
  const TetherReference ref = desired_tether(t, rp);
  return {Vec3::Constant(ref.length), Vec3::Constant(ref.rate)};
}

SatelliteState desired_satellite(double t, const ReferenceParams& rp) {
  if (t < 0.0) throw std::invalid_argument("desired_satellite: t must be >= 0");
  const double ld = rp.l0 + rp.a * t;
  const double radius = ld / std::numbers::sqrt3;
  const double radius_rate = rp.a / std::numbers::sqrt3;
  SatelliteState s;
  for (int i = 0; i < 3; ++i) {
    const double phase = rp.spin_rate * t + 2.0 * std::numbers::pi * i / 3.0;
    const double c = std::cos(phase);
    const double sn = std::sin(phase);
    s.r(2 * i) = radius * c;
    s.r(2 * i + 1) = radius * sn;
    s.v(2 * i) = radius_rate * c - radius * rp.spin_rate * sn;
    s.v(2 * i + 1) = radius_rate * sn + radius * rp.spin_rate * c;
  }
  return s;
}

}  // namespace ttfs
