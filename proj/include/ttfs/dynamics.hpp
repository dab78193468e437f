#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ttfs/types.hpp"

namespace ttfs {

/// Physical constants of the formation, reel motors and orbit.
struct SystemParams {
  double mass = 50.0;         // kg, each satellite
  double R = 7.378e6;         // m, orbit radius
  double mu = 3.98603e14;     // m^3/s^2
  double n = std::sqrt(3.98603e14 / (7.378e6 * 7.378e6 * 7.378e6));  // rad/s
  double E = 1.528e9;         // Pa
  double A = 1.963e-7;        // m^2
  double D_r = 0.05;          // m, drum radius
  double R_a = 0.062;         // Ohm
  double k_e = 0.275;         // V/(rad/s)
  double k_m = 0.275;         // N m / A
  double J = 0.1;             // kg m^2

  /// Motor time constant R_a J / (k_e k_m).
  double T_m() const { return R_a * J / (k_e * k_m); }
  double EA() const { return E * A; }
  /// Throws std::invalid_argument unless every constant is positive and finite.
  void validate() const;
};

enum class DisturbanceMode { None, Paper, CustomTable };

/// Disturbance model. In Paper mode delta_i = l'_i sin(l_i) and
/// d_i = 0.1 [sin t, cos t]; `scale` multiplies both. CustomTable uses
/// per-channel amplitudes in place of 1 (reel) and 0.1 (satellite).
struct DisturbanceSpec {
  DisturbanceMode mode = DisturbanceMode::Paper;
  double scale = 1.0;
  Vec3 reel_amplitude = Vec3::Ones();
  Vec6 satellite_amplitude = Vec6::Constant(0.1);

  Vec3 reel(const TetherState& teth) const;
  Vec6 satellite(double t) const;
};

/// Fixed-step integration settings. One call to `step` covers the control
/// interval; internally RK4 substeps no longer than `max_substep` are taken.
struct IntegratorSettings {
  double satellite_dt = 0.1;
  double reel_dt = 0.02;
  double max_substep() const { return std::min(satellite_dt, reel_dt); }
};

class CoincidentSatellitesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kCoincidenceThreshold = 1e-9;

/// Elastic tether forces (N) on each satellite, stacked [T1x, T1y, ...].
/// A tether pulls only while its endpoints are farther apart than its
/// natural length.
Vec6 tension_forces(const SatelliteState& sat, const TetherState& teth,
                    const SystemParams& p);

/// Force (N) on satellite `pair[0]` from tether k; satellite `pair[1]`
/// receives the negative.
Vec2 tether_pair_force(const SatelliteState& sat, double natural_length,
                       int k, const SystemParams& p);

/// Full nonlinear relative dynamics, z = 0. `T` in newtons, `u` and `d` in m/s^2.
Vec12 satellite_derivative(const SatelliteState& sat, const Vec6& u,
                           const Vec6& T, const Vec6& d, const SystemParams& p);

/// Reel motor dynamics with unmodeled term `delta`.
Vec6 reel_derivative(const TetherState& teth, const Vec3& nu,
                     const Vec3& delta, const SystemParams& p);

/// Linearized satellite model used for gain design.
Vec12 nominal_satellite_derivative(const SatelliteState& sat, const Vec6& u_m,
                                   const SystemParams& p);

Vec6 nominal_reel_derivative(const TetherState& teth, const Vec3& nu_m,
                             const SystemParams& p);

/// State matrices of the nominal models (12x12 satellite, 6x6 reel) and
/// their input matrices.
MatX nominal_satellite_matrix(const SystemParams& p);
MatX nominal_satellite_input();
MatX nominal_reel_matrix(const SystemParams& p);
MatX nominal_reel_input(const SystemParams& p);

/// Advances the coupled satellite + reel system over `dt` with the controls
/// held constant. Tension and state-dependent disturbances are re-evaluated at
/// every RK4 stage.
std::pair<SatelliteState, TetherState> step(const SatelliteState& sat,
                                            const TetherState& teth,
                                            const ControlInputs& controls,
                                            const DisturbanceSpec& dist,
                                            double t, double dt,
                                            const SystemParams& p,
                                            const IntegratorSettings& integ = {});

/// Reel subsystem alone (used by the tether-level environment).
TetherState step_reels(const TetherState& teth, const Vec3& nu,
                       const DisturbanceSpec& dist, double dt,
                       const SystemParams& p,
                       const IntegratorSettings& integ = {});

/// Separation / natural length - 1, per tether.
Vec3 elongation(const SatelliteState& sat, const TetherState& teth);
Vec3 separations(const SatelliteState& sat);

}  // namespace ttfs
