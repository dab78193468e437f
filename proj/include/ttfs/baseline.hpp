#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "ttfs/dynamics.hpp"
#include "ttfs/types.hpp"

namespace ttfs {

/// PD gains: K1 acts on the 6-vector tether error, K2 on the 12-vector
/// satellite error.
struct GainSet {
  Eigen::Matrix<double, 3, 6> K1;
  Eigen::Matrix<double, 6, 12> K2;

  static GainSet pd(double kp1, double kd1, double kp2, double kd2);
};

struct ActuatorBounds {
  double nu_max = 10.0;   // V
  double u_max = 0.02;    // m/s^2
};

/// The deviation argument is the state minus its reference, so that
/// -K e drives the state toward the reference (closed loop A - B K).
Vec3 tether_baseline(const Vec6& deviation, const GainSet& gains, double nu_max);
Vec6 satellite_baseline(const Vec12& deviation, const GainSet& gains, double u_max);

/// Component-wise saturation to [-bound, bound].
template <typename Derived>
auto clamp_symmetric(const Eigen::MatrixBase<Derived>& x, double bound) {
  return x.cwiseMax(-bound).cwiseMin(bound).eval();
}

class NotHurwitzError : public std::runtime_error {
 public:
  NotHurwitzError(const std::string& what, double offending_real_part)
      : std::runtime_error(what), real_part(offending_real_part) {}
  double real_part;
};

class SingularLyapunovError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest real part among the eigenvalues of `A`.
double spectral_abscissa(const MatX& A);

/// Solves A^T P + P A = -Q through the Kronecker-vectorized linear system.
/// Requires A Hurwitz and Q symmetric positive definite.
MatX solve_lyapunov(const MatX& A, const MatX& Q);

struct LyapunovCertificate {
  MatX P;
  MatX Q;
  double min_eig_P = 0.0;
  double max_eig_P = 0.0;
  double min_eig_Q = 0.0;
  /// lambda_min(Q) - 2 c2 lambda_max(P); only meaningful for the satellite case.
  double coupling_margin = 0.0;
  /// 2 c2 lambda_max(P) - lambda_min(Q), the opposite orientation, reported
  /// for completeness.
  double coupling_margin_reversed = 0.0;
  double c2 = 0.0;
  bool has_coupling = false;
  bool valid = false;
  std::string message;
};

struct GainCertificates {
  LyapunovCertificate tether;
  LyapunovCertificate satellite;
  bool all_valid() const { return tether.valid && satellite.valid; }
};

/// Builds the nominal closed loops, solves for P with Q = q_scale * I and
/// checks positive definiteness plus the tension coupling margin with
/// c2 = 2 E A / l_min. Throws NotHurwitzError for unstable closed loops.
GainCertificates certify_gains(const GainSet& gains, const SystemParams& p,
                               double l_min, double q_scale = 1.0);

std::string format_certificates(const GainCertificates& certs);

}  // namespace ttfs
