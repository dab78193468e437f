#include <doctest.h>

#include <cmath>
#include <random>

#include "ttfs/baseline.hpp"

using namespace ttfs;

TEST_CASE("tether baseline: zero, single column and clamp") {
  const GainSet g = GainSet::pd(4.0, 1.5, 0.1, 0.6);
  CHECK(tether_baseline(Vec6::Zero(), g, 10.0).isZero(0.0));
  Vec6 e = Vec6::Zero();
  e(0) = 1.0;
  const Vec3 nu = tether_baseline(e, g, 10.0);
  CHECK(nu(0) == -4.0);
  CHECK(nu(1) == 0.0);
  CHECK(nu(2) == 0.0);
  e(3) = 1.0;
  CHECK(tether_baseline(e, g, 10.0)(0) == -5.5);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> big(0.0, 50.0);
  const GainSet strong = GainSet::pd(100.0, 5.0, 0.1, 0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec6 d;
    for (int i = 0; i < 6; ++i) d(i) = big(rng);
    const Vec3 raw = -(strong.K1 * d);
    const Vec3 out = tether_baseline(d, strong, 10.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(out(k)) <= 10.0);
      // Saturation never flips sign.
      CHECK(out(k) * raw(k) >= 0.0);
    }
  }
}

TEST_CASE("satellite baseline: zero, single column and clamp") {
  const GainSet g = GainSet::pd(100.0, 5.0, 0.01, 0.2);
  CHECK(satellite_baseline(Vec12::Zero(), g, 0.02).isZero(0.0));
  Vec12 e = Vec12::Zero();
  e(0) = 1.0;
  const Vec6 u = satellite_baseline(e, g, 1.0);
  CHECK(u(0) == -0.01);
  CHECK(u.tail<5>().isZero(0.0));
  e(0) = 100.0;
  CHECK(satellite_baseline(e, g, 0.02)(0) == -0.02);
  e(0) = -100.0;
  CHECK(satellite_baseline(e, g, 0.02)(0) == 0.02);
}

TEST_CASE("Lyapunov solver: diagonal cases") {
  for (int n : {1, 3, 6}) {
    const MatX P = solve_lyapunov(-MatX::Identity(n, n), 2.0 * MatX::Identity(n, n));
    CHECK((P - MatX::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  }
  MatX A = MatX::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -2.0;
  const MatX P = solve_lyapunov(A, MatX::Identity(2, 2));
  CHECK(std::abs(P(0, 0) - 0.5) < 1e-10);
  CHECK(std::abs(P(1, 1) - 0.25) < 1e-10);
  CHECK(std::abs(P(0, 1)) < 1e-10);
  CHECK(std::abs(P(1, 0)) < 1e-10);
}

TEST_CASE("Lyapunov solver: errors") {
  MatX A = MatX::Identity(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = 0.5;
  try {
    solve_lyapunov(A, MatX::Identity(2, 2));
    FAIL("expected NotHurwitzError");
  } catch (const NotHurwitzError& e) {
    CHECK(e.real_part == doctest::Approx(0.5));
  }
  MatX Qbad = MatX::Identity(2, 2);
  Qbad(1, 1) = -1.0;
  CHECK_THROWS_AS(solve_lyapunov(-MatX::Identity(2, 2), Qbad), std::invalid_argument);
  CHECK_THROWS_AS(solve_lyapunov(-MatX::Identity(2, 2), MatX::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("certificates: zero gains are rejected, Q scaling scales P") {
  SystemParams p;
  GainSet zero = GainSet::pd(100.0, 5.0, 0.0, 0.0);
  CHECK_THROWS_AS(certify_gains(zero, p, 1.0), NotHurwitzError);

  const GainSet g = GainSet::pd(100.0, 5.0, 0.1, 0.6);
  const GainCertificates c1 = certify_gains(g, p, 1.0, 1.0);
  const GainCertificates c3 = certify_gains(g, p, 1.0, 3.0);
  CHECK((c3.tether.P - 3.0 * c1.tether.P).cwiseAbs().maxCoeff() < 1e-9 * c3.tether.P.cwiseAbs().maxCoeff());
  CHECK((c3.satellite.P - 3.0 * c1.satellite.P).cwiseAbs().maxCoeff() <
        1e-9 * c3.satellite.P.cwiseAbs().maxCoeff());
  CHECK((c1.satellite.coupling_margin > 0) == (c3.satellite.coupling_margin > 0));
  CHECK(c1.satellite.coupling_margin_reversed == doctest::Approx(-c1.satellite.coupling_margin));
  CHECK(c1.satellite.c2 == doctest::Approx(2.0 * p.EA() / 1.0));
  CHECK(c1.tether.valid);
  CHECK(c1.tether.min_eig_P > 0.0);
  CHECK(!format_certificates(c1).empty());
}

TEST_CASE("V = e'Pe decreases along the undisturbed nominal closed loop") {
  SystemParams p;
  const GainSet g = GainSet::pd(100.0, 5.0, 0.1, 0.6);
  const GainCertificates c = certify_gains(g, p, 1.0);
  struct Case {
    MatX A;
    MatX P;
  };
  const Case cases[2] = {
      {nominal_reel_matrix(p) - nominal_reel_input(p) * g.K1, c.tether.P},
      {nominal_satellite_matrix(p) - nominal_satellite_input() * g.K2, c.satellite.P},
  };
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (const auto& cs : cases) {
    const Eigen::Index n = cs.A.rows();
    VecX e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = gauss(rng);
    // Exact discretization over a short interval.
    const double h = 0.005;
    MatX Phi = MatX::Identity(n, n), term = MatX::Identity(n, n);
    for (int k = 1; k < 30; ++k) {
      term = term * cs.A * (h / k);
      Phi += term;
    }
    const double v0 = e.dot(cs.P * e);
    int decreasing = 0, counted = 0;
    double v = v0;
    for (int s = 0; s < 20000; ++s) {
      const VecX next = Phi * e;
      const double vn = next.dot(cs.P * next);
      if (v > 1e-12 * v0) {
        ++counted;
        if (vn < v) ++decreasing;
      }
      e = next;
      v = vn;
    }
    REQUIRE(counted > 0);
    CHECK(static_cast<double>(decreasing) / counted >= 0.99);
  }
}
