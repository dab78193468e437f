#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "ttfs/checkpoint.hpp"
#include "ttfs/nn.hpp"

using namespace ttfs;

TEST_CASE("forward: constant output from zero weights") {
  Mlp net({3, 4, 2});
  net.params().setZero();
  net.bias(1) << 0.25, -1.5;
  VecX x(3);
  x << 7.0, -2.0, 0.1;
  const VecX y = net.forward(x);
  CHECK(y(0) == 0.25);
  CHECK(y(1) == -1.5);
}

TEST_CASE("forward: single affine layer") {
  Rng rng(1);
  Mlp net({3, 2}, rng);
  VecX x(3);
  x << 0.5, -1.0, 2.0;
  const VecX expected = net.weight(0) * x + net.bias(0);
  CHECK((net.forward(x) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward: hand-traced 2-2-1 net scales with a nonnegative input") {
  Mlp net({2, 2, 1});
  net.weight(0) << 1.0, 2.0, 0.5, 0.25;
  net.bias(0).setZero();
  net.weight(1) << 1.0, 3.0;
  net.bias(1).setZero();
  VecX x(2);
  x << 1.0, 2.0;
  // hidden = [1 + 4, 0.5 + 0.5] = [5, 1]; output = 5 + 3 = 8
  CHECK(net.forward(x)(0) == 8.0);
  CHECK(net.forward(VecX(2.0 * x))(0) == 16.0);
}

TEST_CASE("forward: shape mismatch") {
  Mlp net({3, 2});
  CHECK_THROWS_AS(net.forward(VecX(VecX::Zero(4))), std::invalid_argument);
}

TEST_CASE("backward: linear net and zero upstream") {
  Rng rng(2);
  Mlp net({4, 3}, rng);
  MatX X(4, 1);
  X << 1.0, -2.0, 0.5, 3.0;
  MatX up(3, 1);
  up << 0.3, -1.0, 2.0;
  Mlp::Cache cache;
  net.forward(X, &cache);
  VecX grad;
  net.backward(cache, up, grad);
  const MatX outer = up * X.transpose();
  const Eigen::Map<const MatX> gW(grad.data(), 3, 4);
  CHECK((gW - outer).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((grad.tail(3) - up.col(0)).cwiseAbs().maxCoeff() < 1e-15);

  Mlp deep({4, 5, 3}, rng);
  Mlp::Cache c2;
  deep.forward(X, &c2);
  VecX g2;
  deep.backward(c2, MatX::Zero(3, 1), g2);
  CHECK(g2.isZero(0.0));
}

TEST_CASE("backward agrees with central differences") {
  Rng rng(17);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net({3, 6, 5, 2}, rng);
    MatX X(3, 4), up(2, 4);
    do {
      for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = gauss(rng);
    } while (oracles::kink_margin(net, X) < 1e-3);
    for (Eigen::Index i = 0; i < up.size(); ++i) up(i) = gauss(rng);
    const auto err = oracles::check_mlp_gradients(net, X, up);
    CHECK(err.params < 1e-4);
    CHECK(err.input < 1e-4);
  }
}

TEST_CASE("policy backward agrees with central differences") {
  Rng rng(23);
  std::normal_distribution<double> gauss;
  GaussianPolicy pi(4, 2, {8, 8}, rng);
  // Widen the initial means so that the tanh saturation is exercised.
  pi.net().params() *= 3.0;
  MatX obs(4, 3);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs(i) = gauss(rng);
  MatX dA(2, 3);
  for (Eigen::Index i = 0; i < dA.size(); ++i) dA(i) = gauss(rng);
  VecX dlogp(3);
  for (Eigen::Index i = 0; i < 3; ++i) dlogp(i) = gauss(rng);

  const std::uint64_t noise_seed = 99;
  auto objective = [&](const GaussianPolicy& p) {
    Rng r(noise_seed);
    const auto s = p.sample(obs, r, false);
    return (s.action.array() * dA.array()).sum() + s.log_prob.dot(dlogp);
  };
  Rng r(noise_seed);
  const auto s = pi.sample(obs, r, false);
  const VecX g = pi.backward(s, dA, dlogp);

  GaussianPolicy probe = pi;
  VecX fd(g.size());
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double keep = probe.net().params()(i);
    probe.net().params()(i) = keep + h;
    const double up = objective(probe);
    probe.net().params()(i) = keep - h;
    const double down = objective(probe);
    probe.net().params()(i) = keep;
    fd(i) = (up - down) / (2.0 * h);
  }
  CHECK((g - fd).norm() / std::max(g.norm(), fd.norm()) < 1e-4);
}

TEST_CASE("squashed sampling: range and deterministic mode") {
  Rng rng(5);
  Mlp net({2, 4});
  net.params().setZero();
  GaussianPolicy pi(net, 2);
  const VecX obs = VecX::Zero(2);
  const SquashedSample det = sample_squashed(pi, obs, rng, true);
  CHECK(det.action(0) == 0.5);
  CHECK(det.action(1) == 0.5);

  pi.net().bias(0)(0) = 40.0;
  pi.net().bias(0)(1) = -40.0;
  const SquashedSample ext = sample_squashed(pi, obs, rng, true);
  CHECK(ext.action(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ext.action(1) == doctest::Approx(0.0).epsilon(1e-12));

  pi.net().params().setZero();
  for (int k = 0; k < 1000; ++k) {
    const SquashedSample s = sample_squashed(pi, obs, rng, false);
    CHECK((s.action.array() >= 0.0).all());
    CHECK((s.action.array() <= 1.0).all());
    CHECK(std::isfinite(s.log_prob));
    CHECK(s.log_prob == doctest::Approx(pi.log_density(obs, s.action)).epsilon(1e-8));
  }
}

TEST_CASE("log-std clamp") {
  Mlp net({1, 2});
  net.params().setZero();
  net.bias(0)(1) = 50.0;
  GaussianPolicy pi(net, 1);
  Rng rng(1);
  const auto s = pi.sample(MatX::Zero(1, 1), rng, false);
  CHECK(s.log_std(0, 0) == GaussianPolicy::kLogStdMax);
  pi.net().bias(0)(1) = -50.0;
  const auto s2 = pi.sample(MatX::Zero(1, 1), rng, false);
  CHECK(s2.log_std(0, 0) == GaussianPolicy::kLogStdMin);
}

TEST_CASE("1-D squashed density integrates to one") {
  Rng rng(8);
  for (double shift : {0.0, 0.7, -1.3}) {
    GaussianPolicy pi(2, 1, {6}, rng);
    pi.net().bias(1)(0) += shift;
    VecX obs(2);
    obs << 0.3, 0.8;
    CHECK(std::abs(oracles::squashed_density_integral(pi, obs) - 1.0) < 1e-2);
  }
}

TEST_CASE("adam") {
  VecX w = VecX::Constant(1, 2.0);
  OptimizerState opt = OptimizerState::for_size(1, 1e-2);
  CHECK(adam_step(w, VecX::Zero(1), opt));
  CHECK(w(0) == 2.0);
  CHECK(opt.step == 1);

  for (int k = 0; k < 100; ++k) adam_step(w, VecX::Constant(1, 0.5), opt);
  CHECK(w(0) < 2.0);

  VecX v = VecX::Zero(1);
  OptimizerState o2 = OptimizerState::for_size(1, 1e-2);
  for (int k = 0; k < 10000; ++k) adam_step(v, VecX::Constant(1, 2.0 * (v(0) - 3.0)), o2);
  CHECK(std::abs(v(0) - 3.0) < 1e-2);

  VecX bad = VecX::Constant(1, std::nan(""));
  const VecX before = v;
  CHECK_FALSE(adam_step(v, bad, o2));
  CHECK(o2.skipped == 1);
  CHECK(v == before);
}

TEST_CASE("gradient clipping") {
  VecX g(2);
  g << 30.0, 40.0;
  CHECK(clip_grad_norm(g, 10.0) == 50.0);
  CHECK(g.norm() == doctest::Approx(10.0));
  VecX small(2);
  small << 0.3, 0.4;
  clip_grad_norm(small, 10.0);
  CHECK(small(0) == 0.3);
}

TEST_CASE("log1m_tanh2 is stable") {
  for (double z : {0.0, 0.5, -3.0, 10.0}) {
    const long double exact = -2.0L * std::log(std::cosh(static_cast<long double>(z)));
    CHECK(log1m_tanh2(z) == doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));
  }
  CHECK(std::isfinite(log1m_tanh2(500.0)));
  CHECK(log1m_tanh2(500.0) == doctest::Approx(std::log(4.0) - 1000.0));
}

TEST_CASE("network serialization round-trips bit for bit") {
  Rng rng(3);
  Mlp net({5, 7, 3}, rng);
  OptimizerState opt = OptimizerState::for_size(net.num_params(), 1e-3);
  adam_step(net.params(), VecX::Ones(net.num_params()), opt);
  std::stringstream ss;
  BinaryWriter w(ss);
  w.mlp(net);
  w.optimizer(opt);
  BinaryReader r(ss);
  const Mlp back = r.mlp();
  const OptimizerState ob = r.optimizer();
  CHECK(back.widths() == net.widths());
  CHECK(std::memcmp(back.params().data(), net.params().data(), sizeof(double) * net.num_params()) == 0);
  CHECK(ob.m == opt.m);
  CHECK(ob.v == opt.v);
  CHECK(ob.step == opt.step);
}
