#include "ttfs/baseline.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace ttfs {

GainSet GainSet::pd(double kp1, double kd1, double kp2, double kd2) {
  GainSet g;
  g.K1.setZero();
  g.K1.leftCols<3>() = kp1 * Eigen::Matrix3d::Identity();
  g.K1.rightCols<3>() = kd1 * Eigen::Matrix3d::Identity();
  g.K2.setZero();
  g.K2.leftCols<6>() = kp2 * Eigen::Matrix<double, 6, 6>::Identity();
  g.K2.rightCols<6>() = kd2 * Eigen::Matrix<double, 6, 6>::Identity();
  return g;
}

Vec3 tether_baseline(const Vec6& deviation, const GainSet& gains, double nu_max) {
  return clamp_symmetric(-gains.K1 * deviation, nu_max);
}

Vec6 satellite_baseline(const Vec12& deviation, const GainSet& gains, double u_max) {
  return clamp_symmetric(-gains.K2 * deviation, u_max);
}

double spectral_abscissa(const MatX& A) {
  Eigen::EigenSolver<MatX> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

MatX solve_lyapunov(const MatX& A, const MatX& Q) {
  if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows()) {
    throw std::invalid_argument("solve_lyapunov: A and Q must be square and equal size");
  }
  if (!Q.isApprox(Q.transpose(), 1e-12)) {
    throw std::invalid_argument("solve_lyapunov: Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatX> qs(Q, Eigen::EigenvaluesOnly);
  if (qs.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("solve_lyapunov: Q must be positive definite");
  }
  const double abscissa = spectral_abscissa(A);
  if (abscissa >= 0.0) {
    std::ostringstream msg;
    msg << "solve_lyapunov: closed loop is not Hurwitz (eigenvalue real part "
        << abscissa << ")";
    throw NotHurwitzError(msg.str(), abscissa);
  }

  const Eigen::Index n = A.rows();
  const MatX I = MatX::Identity(n, n);
  const MatX At = A.transpose();
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P) for column-major vec.
  const MatX L = Eigen::kroneckerProduct(I, At) + Eigen::kroneckerProduct(At, I);
  const VecX rhs = -Eigen::Map<const VecX>(Q.data(), n * n);
  Eigen::FullPivLU<MatX> lu(L);
  if (!lu.isInvertible()) {
    throw SingularLyapunovError("solve_lyapunov: Kronecker system is singular");
  }
  const VecX x = lu.solve(rhs);
  MatX P = Eigen::Map<const MatX>(x.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();
  return P;
}

namespace {

LyapunovCertificate make_certificate(const MatX& A_cl, const MatX& Q) {
  LyapunovCertificate c;
  c.Q = Q;
  c.P = solve_lyapunov(A_cl, Q);
  Eigen::SelfAdjointEigenSolver<MatX> ps(c.P, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<MatX> qs(Q, Eigen::EigenvaluesOnly);
  c.min_eig_P = ps.eigenvalues().minCoeff();
  c.max_eig_P = ps.eigenvalues().maxCoeff();
  c.min_eig_Q = qs.eigenvalues().minCoeff();
  return c;
}

constexpr double kEigTolerance = 1e-10;

}  // namespace

GainCertificates certify_gains(const GainSet& gains, const SystemParams& p,
                               double l_min, double q_scale) {
  if (!(l_min > 0.0)) throw std::invalid_argument("certify_gains: l_min must be positive");
  if (!(q_scale > 0.0)) throw std::invalid_argument("certify_gains: q_scale must be positive");
  GainCertificates out;

  const MatX A1 = nominal_reel_matrix(p) - nominal_reel_input(p) * gains.K1;
  out.tether = make_certificate(A1, q_scale * MatX::Identity(6, 6));
  out.tether.valid = out.tether.min_eig_P > kEigTolerance && out.tether.min_eig_Q > kEigTolerance;
  out.tether.message = out.tether.valid ? "ok" : "P not positive definite";

  const MatX A2 = nominal_satellite_matrix(p) - nominal_satellite_input() * gains.K2;
  LyapunovCertificate& s = out.satellite;
  s = make_certificate(A2, q_scale * MatX::Identity(12, 12));
  s.has_coupling = true;
  s.c2 = 2.0 * p.EA() / l_min;
  s.coupling_margin = s.min_eig_Q - 2.0 * s.c2 * s.max_eig_P;
  s.coupling_margin_reversed = -s.coupling_margin;
  const bool pd = s.min_eig_P > kEigTolerance && s.min_eig_Q > kEigTolerance;
  s.valid = pd && s.coupling_margin > 0.0;
  if (!pd) {
    s.message = "P not positive definite";
  } else if (s.coupling_margin <= 0.0) {
    std::ostringstream msg;
    msg << "coupling condition violated (margin " << s.coupling_margin << ")";
    s.message = msg.str();
  } else {
    s.message = "ok";
  }
  return out;
}

std::string format_certificates(const GainCertificates& certs) {
  std::ostringstream os;
  os.precision(6);
  auto one = [&](const char* name, const LyapunovCertificate& c) {
    os << "[" << name << "]\n"
       << "  lambda_min(P) = " << c.min_eig_P << "\n"
       << "  lambda_max(P) = " << c.max_eig_P << "\n"
       << "  lambda_min(Q) = " << c.min_eig_Q << "\n";
    if (c.has_coupling) {
      os << "  c2 = " << c.c2 << "\n"
         << "  lambda_min(Q) - 2 c2 lambda_max(P) = " << c.coupling_margin << "\n"
         << "  2 c2 lambda_max(P) - lambda_min(Q) = " << c.coupling_margin_reversed << "\n";
    }
    os << "  valid = " << (c.valid ? "yes" : "no") << " (" << c.message << ")\n";
  };
  one("tether", certs.tether);
  one("satellite", certs.satellite);
  return os.str();
}

}  // namespace ttfs
