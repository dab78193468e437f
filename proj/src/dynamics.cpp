#include "ttfs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ttfs {

void SystemParams::validate() const {
  const double values[] = {mass, R, mu, n, E, A, D_r, R_a, k_e, k_m, J};
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("SystemParams: constants must be positive");
    }
  }
}

Vec3 DisturbanceSpec::reel(const TetherState& teth) const {
  switch (mode) {
    case DisturbanceMode::None:
      return Vec3::Zero();
    case DisturbanceMode::Paper:
      return scale * teth.speed.cwiseProduct(teth.length.array().sin().matrix());
    case DisturbanceMode::CustomTable:
      return scale * reel_amplitude.cwiseProduct(
                         teth.speed.cwiseProduct(teth.length.array().sin().matrix()));
  }
  return Vec3::Zero();
}

Vec6 DisturbanceSpec::satellite(double t) const {
  Vec6 d;
  for (int i = 0; i < 3; ++i) {
    d(2 * i) = std::sin(t);
    d(2 * i + 1) = std::cos(t);
  }
  switch (mode) {
    case DisturbanceMode::None:
      return Vec6::Zero();
    case DisturbanceMode::Paper:
      return scale * 0.1 * d;
    case DisturbanceMode::CustomTable:
      return scale * satellite_amplitude.cwiseProduct(d);
  }
  return Vec6::Zero();
}

Vec2 tether_pair_force(const SatelliteState& sat, double natural_length, int k,
                       const SystemParams& p) {
  const int i = kTetherPairs[k][0];
  const int j = kTetherPairs[k][1];
  const Vec2 diff = sat.position(i) - sat.position(j);
  const double dist = diff.norm();
  if (dist < kCoincidenceThreshold) {
    throw CoincidentSatellitesError("satellites " + std::to_string(i + 1) +
                                    " and " + std::to_string(j + 1) +
                                    " coincide");
  }
  if (dist <= natural_length) return Vec2::Zero();
  return -(p.EA() / natural_length) * (dist - natural_length) * (diff / dist);
}

Vec6 tension_forces(const SatelliteState& sat, const TetherState& teth,
                    const SystemParams& p) {
  Vec6 T = Vec6::Zero();
  for (int k = 0; k < 3; ++k) {
    const Vec2 f = tether_pair_force(sat, teth.length(k), k, p);
    T.segment<2>(2 * kTetherPairs[k][0]) += f;
    T.segment<2>(2 * kTetherPairs[k][1]) -= f;
  }
  return T;
}

Vec12 satellite_derivative(const SatelliteState& sat, const Vec6& u,
                           const Vec6& T, const Vec6& d, const SystemParams& p) {
  Vec12 out;
  out.head<6>() = sat.v;
  const double n2 = p.n * p.n;
  for (int i = 0; i < 3; ++i) {
    const double x = sat.r(2 * i);
    const double y = sat.r(2 * i + 1);
    const double vx = sat.v(2 * i);
    const double vy = sat.v(2 * i + 1);
    const double ry = p.R + y;
    const double rho = std::pow(x * x + ry * ry, 1.5);
    const double ax = 2.0 * p.n * vy + n2 * x - p.mu * x / rho;
    const double ay = -2.0 * p.n * vx + n2 * ry - p.mu * ry / rho;
    out(6 + 2 * i) = ax + T(2 * i) / p.mass + u(2 * i) + d(2 * i);
    out(6 + 2 * i + 1) = ay + T(2 * i + 1) / p.mass + u(2 * i + 1) + d(2 * i + 1);
  }
  return out;
}

Vec6 reel_derivative(const TetherState& teth, const Vec3& nu, const Vec3& delta,
                     const SystemParams& p) {
  const double Tm = p.T_m();
  Vec6 out;
  out.head<3>() = teth.speed;
  out.tail<3>() = -teth.speed / Tm + (p.D_r / (Tm * p.k_e)) * nu +
                  (p.D_r / Tm) * delta;
  return out;
}

MatX nominal_satellite_matrix(const SystemParams& p) {
  MatX A = MatX::Zero(12, 12);
  A.block(0, 6, 6, 6).setIdentity();
  for (int i = 0; i < 3; ++i) {
    const int ix = 6 + 2 * i;
    A(ix + 1, 2 * i + 1) = 3.0 * p.n * p.n;
    A(ix, ix + 1) = 2.0 * p.n;
    A(ix + 1, ix) = -2.0 * p.n;
  }
  return A;
}

MatX nominal_satellite_input() {
  MatX B = MatX::Zero(12, 6);
  B.block(6, 0, 6, 6).setIdentity();
  return B;
}

MatX nominal_reel_matrix(const SystemParams& p) {
  MatX A = MatX::Zero(6, 6);
  A.block(0, 3, 3, 3).setIdentity();
  A.block(3, 3, 3, 3) = -MatX::Identity(3, 3) / p.T_m();
  return A;
}

MatX nominal_reel_input(const SystemParams& p) {
  MatX B = MatX::Zero(6, 3);
  B.block(3, 0, 3, 3) = MatX::Identity(3, 3) * (p.D_r / (p.T_m() * p.k_e));
  return B;
}

Vec12 nominal_satellite_derivative(const SatelliteState& sat, const Vec6& u_m,
                                   const SystemParams& p) {
  return nominal_satellite_matrix(p) * sat.stacked() + nominal_satellite_input() * u_m;
}

Vec6 nominal_reel_derivative(const TetherState& teth, const Vec3& nu_m,
                             const SystemParams& p) {
  return reel_derivative(teth, nu_m, Vec3::Zero(), p);
}

namespace {

using Coupled = Eigen::Matrix<double, 18, 1>;

Coupled coupled_derivative(const Coupled& x, const ControlInputs& c,
                           const DisturbanceSpec& dist, double t,
                           const SystemParams& p) {
  const SatelliteState sat = SatelliteState::from_stacked(x.head<12>());
  const TetherState teth = TetherState::from_stacked(x.tail<6>());
  Coupled dx;
  dx.head<12>() = satellite_derivative(sat, c.u, tension_forces(sat, teth, p),
                                       dist.satellite(t), p);
  dx.tail<6>() = reel_derivative(teth, c.nu, dist.reel(teth), p);
  return dx;
}

int substeps(double dt, double max_substep) {
  return std::max(1, static_cast<int>(std::ceil(dt / max_substep - 1e-9)));
}

}  // namespace

std::pair<SatelliteState, TetherState> step(const SatelliteState& sat,
                                            const TetherState& teth,
                                            const ControlInputs& controls,
                                            const DisturbanceSpec& dist,
                                            double t, double dt,
                                            const SystemParams& p,
                                            const IntegratorSettings& integ) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  Coupled x;
  x << sat.stacked(), teth.stacked();
  const int m = substeps(dt, integ.max_substep());
  const double h = dt / m;
  for (int s = 0; s < m; ++s) {
    const double ts = t + s * h;
    const Coupled k1 = coupled_derivative(x, controls, dist, ts, p);
    const Coupled k2 = coupled_derivative(x + 0.5 * h * k1, controls, dist, ts + 0.5 * h, p);
    const Coupled k3 = coupled_derivative(x + 0.5 * h * k2, controls, dist, ts + 0.5 * h, p);
    const Coupled k4 = coupled_derivative(x + h * k3, controls, dist, ts + h, p);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!x.allFinite()) throw NonFiniteStateError("step: state diverged");
  return {SatelliteState::from_stacked(x.head<12>()),
          TetherState::from_stacked(x.tail<6>())};
}

TetherState step_reels(const TetherState& teth, const Vec3& nu,
                       const DisturbanceSpec& dist, double dt,
                       const SystemParams& p, const IntegratorSettings& integ) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_reels: dt must be positive");
  auto f = [&](const Vec6& x) {
    const TetherState s = TetherState::from_stacked(x);
    return reel_derivative(s, nu, dist.reel(s), p);
  };
  Vec6 x = teth.stacked();
  const int m = substeps(dt, integ.reel_dt);
  const double h = dt / m;
  for (int s = 0; s < m; ++s) {
    const Vec6 k1 = f(x);
    const Vec6 k2 = f(x + 0.5 * h * k1);
    const Vec6 k3 = f(x + 0.5 * h * k2);
    const Vec6 k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!x.allFinite()) throw NonFiniteStateError("step_reels: state diverged");
  return TetherState::from_stacked(x);
}

Vec3 separations(const SatelliteState& sat) {
  Vec3 s;
  for (int k = 0; k < 3; ++k) {
    s(k) = (sat.position(kTetherPairs[k][0]) - sat.position(kTetherPairs[k][1])).norm();
  }
  return s;
}

Vec3 elongation(const SatelliteState& sat, const TetherState& teth) {
  return separations(sat).cwiseQuotient(teth.length) - Vec3::Ones();
}

}  // namespace ttfs
