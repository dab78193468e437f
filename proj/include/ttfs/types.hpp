#pragma once

#include <Eigen/Dense>

namespace ttfs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Planar positions and velocities of the three satellites in the orbit
/// frame, ordered [x1, y1, x2, y2, x3, y3].
struct SatelliteState {
  Vec6 r = Vec6::Zero();
  Vec6 v = Vec6::Zero();

  Vec12 stacked() const {
    Vec12 s;
    s << r, v;
    return s;
  }
  static SatelliteState from_stacked(const Vec12& s) {
    return {s.head<6>(), s.tail<6>()};
  }
  Vec2 position(int i) const { return r.segment<2>(2 * i); }
  bool finite() const { return r.allFinite() && v.allFinite(); }
};

/// Natural lengths and reeling speeds of tethers l1 = l12, l2 = l23, l3 = l13.
struct TetherState {
  Vec3 length = Vec3::Ones();
  Vec3 speed = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 s;
    s << length, speed;
    return s;
  }
  static TetherState from_stacked(const Vec6& s) {
    return {s.head<3>(), s.tail<3>()};
  }
  bool finite() const { return length.allFinite() && speed.allFinite(); }
};

/// Thrust accelerations (m/s^2) and reel motor voltages (V).
struct ControlInputs {
  Vec6 u = Vec6::Zero();
  Vec3 nu = Vec3::Zero();
};

/// Satellite index pairs joined by tether k: (1,2), (2,3), (1,3).
inline constexpr int kTetherPairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};

}  // namespace ttfs
