#pragma once

#include "ttfs/types.hpp"

namespace ttfs {

/// Constant-rate deployment with the formation spinning at `spin_rate`.
struct ReferenceParams {
  double a = 1.0;            // m/s, release rate
  double l0 = 1.0;           // m, initial natural length
  double spin_rate = 0.003;  // rad/s, formation rotation in the orbit frame
  double t_final = 200.0;    // s

  double final_length() const { return l0 + a * t_final; }
  void validate() const;
};

struct TetherReference {
  double length;
  double rate;
};

TetherReference desired_tether(double t, const ReferenceParams& rp);

/// Reference tether state, identical for all three tethers.
TetherState desired_tether_state(double t, const ReferenceParams& rp);

/// Equilateral triangle inscribed in a circle of radius l_d / sqrt(3), with
/// analytic velocities.
SatelliteState desired_satellite(double t, const ReferenceParams& rp);

}  // namespace ttfs
