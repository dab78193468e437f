#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ttfs/env.hpp"

using namespace ttfs;

namespace {

NormalizationBounds box() {
  NormalizationBounds b{VecX(3), VecX(3)};
  b.min << -1.0, 0.0, 10.0;
  b.max << 1.0, 5.0, 30.0;
  return b;
}

// Asymptotic Kolmogorov distribution tail, P(K > x).
double kolmogorov_tail(double x) {
  double s = 0.0;
  for (int k = 1; k < 100; ++k) s += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

TEST_CASE("min-max normalization") {
  const NormalizationBounds b = box();
  CHECK(normalize(b.min, b).isZero(0.0));
  CHECK((normalize(b.max, b).array() == 1.0).all());
  CHECK((normalize(0.5 * (b.min + b.max), b).array() == 0.5).all());

  long clips = 0;
  VecX outside(3);
  outside << -3.0, 2.5, 100.0;
  const VecX n = normalize(outside, b, &clips);
  CHECK(clips == 2);
  CHECK(n(0) == 0.0);
  CHECK(n(1) == 0.5);
  CHECK(n(2) == 1.0);

  CHECK(denormalize_action(VecX::Zero(3), b) == b.min);
  CHECK(denormalize_action(VecX::Ones(3), b) == b.max);
  CHECK_THROWS(denormalize_action(VecX::Constant(3, 1.01), b));
  CHECK_THROWS(denormalize_action(VecX::Constant(3, -1e-9), b));

  Rng rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    VecX a(3);
    for (int i = 0; i < 3; ++i) a(i) = unit(rng);
    CHECK((normalize(denormalize_action(a, b), b) - a).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tether reward examples") {
  RewardParams rp;
  CHECK(reward_tether(Vec6::Zero(), rp) == 0.0);
  Vec6 e = Vec6::Zero();
  e(0) = 1.0;
  CHECK(std::abs(reward_tether(e, rp) - (-0.5)) < 1e-12);
  e << 1e12, 0, 0, 1e12, 0, 0;
  CHECK(reward_tether(e, rp) == doctest::Approx(-3.5).epsilon(1e-9));
  CHECK(rp.tether_floor() == -3.5);
}

TEST_CASE("satellite reward examples") {
  RewardParams rp;
  SatelliteState s;
  s.r << 0, 0, 3, 0, 0, 4;
  TetherState t;
  t.length = separations(s);
  const SatelliteReward zero = reward_satellite(Vec12::Zero(), Vec6::Zero(), s, t, rp);
  CHECK(zero.tracking == 0.0);
  CHECK(zero.energy == 0.0);
  CHECK(zero.distance == 0.0);
  CHECK(zero.total() == 0.0);

  Vec6 u = Vec6::Zero();
  u(2) = 1.0;
  CHECK(std::abs(reward_satellite(Vec12::Zero(), u, s, t, rp).energy - (-0.6)) < 1e-12);

  TetherState taut = t;
  taut.length(0) = 0.98 * separations(s)(0);
  const double expected = 1.0 / (1.0 + 100.0 * 0.02 * 0.02) - 1.0;
  const double got = reward_satellite(Vec12::Zero(), Vec6::Zero(), s, taut, rp).distance;
  CHECK(got == doctest::Approx(expected).epsilon(1e-10));
  CHECK(got == doctest::Approx(-0.03846).epsilon(1e-3));

  SatelliteState coincident;
  coincident.r << 1, 1, 1, 1, 0, 5;
  CHECK_THROWS_AS(reward_satellite(Vec12::Zero(), Vec6::Zero(), coincident, t, rp), CoincidentSatellitesError);
}

TEST_CASE("termination classification") {
  EpisodeConfig c;
  CHECK(check_termination(c.theta1 + 0.001, c.theta1, 0.0, 10.0, 200.0, c) == DoneReason::Divergence);
  CHECK(check_termination(0.0, c.theta1, 0.0, 10.0, 200.0, c) == DoneReason::None);
  CHECK(check_termination(0.01, c.theta1, 0.5, 200.0, 200.0, c) == DoneReason::Horizon);
  CHECK(check_termination(1e-6, c.theta1, 1e-6, 200.0, 200.0, c) == DoneReason::Goal);
  CHECK(check_termination(std::nan(""), c.theta1, 0.0, 1.0, 200.0, c) == DoneReason::Divergence);
}

TEST_CASE("reset modes") {
  EnvConfig cfg;
  FormationEnv env(EnvKind::Satellite, cfg);
  Rng rng(9);

  cfg.episode.reset_mode = ResetMode::FixedPoint;
  const InitialStates fixed =
      reset(cfg.episode, cfg.reference, env.tether_error_span(), env.satellite_error_span(), rng);
  CHECK(fixed.t0 == 0.0);
  CHECK(fixed.tether.stacked() == desired_tether_state(0.0, cfg.reference).stacked());
  CHECK(fixed.satellite.stacked() == desired_satellite(0.0, cfg.reference).stacked());

  cfg.episode.reset_mode = ResetMode::RandomOnTrajectory;
  cfg.episode.reset_fraction = 0.0;
  const InitialStates clean =
      reset(cfg.episode, cfg.reference, env.tether_error_span(), env.satellite_error_span(), rng);
  CHECK(clean.tether.stacked() == desired_tether_state(clean.t0, cfg.reference).stacked());

  cfg.episode.reset_fraction = 0.01;
  const Vec6 tspan = env.tether_error_span();
  const Vec12 sspan = env.satellite_error_span();
  std::vector<double> starts;
  for (int i = 0; i < 10000; ++i) {
    const InitialStates init = reset(cfg.episode, cfg.reference, tspan, sspan, rng);
    starts.push_back(init.t0);
    CHECK(init.t0 >= 0.0);
    CHECK(init.t0 < cfg.reference.t_final);
    const Vec6 de = (init.tether.stacked() - desired_tether_state(init.t0, cfg.reference).stacked()).cwiseAbs();
    const Vec12 ds = (init.satellite.stacked() - desired_satellite(init.t0, cfg.reference).stacked()).cwiseAbs();
    CHECK((de.array() <= 0.01 * tspan.array() + 1e-12).all());
    CHECK((ds.array() <= 0.01 * sspan.array() + 1e-12).all());
  }
  // Start times live on the control grid; compare against the continuous
  // uniform law with the usual Kolmogorov-Smirnov statistic.
  std::sort(starts.begin(), starts.end());
  const double n = static_cast<double>(starts.size());
  double d = 0.0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double f = starts[i] / cfg.reference.t_final;
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double p = kolmogorov_tail(std::sqrt(n) * d);
  CHECK(p > 0.01);
}

TEST_CASE("zero learned action reproduces the baseline-only closed loop") {
  EnvConfig cfg;
  cfg.reference.t_final = 20.0;
  FormationEnv env(EnvKind::Satellite, cfg);
  Rng rng(4);
  env.reset(rng);
  SatelliteState sat = env.satellite();
  TetherState teth = env.tether();
  double t = env.time();
  const VecX zero = env.zero_action();
  for (int k = 0; k < 50; ++k) {
    const Transition tr = env.step(zero);
    ControlInputs c;
    c.nu = tether_baseline(teth.stacked() - desired_tether_state(t, cfg.reference).stacked(), cfg.gains,
                           cfg.actuators.nu_max);
    c.u = satellite_baseline(sat.stacked() - desired_satellite(t, cfg.reference).stacked(), cfg.gains,
                             cfg.actuators.u_max);
    auto [ns, nt] = step(sat, teth, c, cfg.disturbance, t, cfg.episode.dt, cfg.system, cfg.integrator);
    sat = ns;
    teth = nt;
    t = std::round((t + cfg.episode.dt) / cfg.episode.dt) * cfg.episode.dt;
    CHECK(env.satellite().stacked() == sat.stacked());
    CHECK(env.tether().stacked() == teth.stacked());
    CHECK(env.last_info().learned.u.isZero(0.0));
    CHECK(tr.r == doctest::Approx(env.reward_for_state(env.last_info().applied)).epsilon(1e-15));
    if (tr.done) break;
  }
}

TEST_CASE("transitions are deterministic and rewards consistent") {
  EnvConfig cfg;
  for (EnvKind kind : {EnvKind::Tether, EnvKind::Satellite, EnvKind::Centralized}) {
    FormationEnv a(kind, cfg), b(kind, cfg);
    Rng ra(77), rb(77), act(3);
    const VecX oa = a.reset(ra), ob = b.reset(rb);
    CHECK(oa == ob);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 40; ++k) {
      VecX u(a.act_dim());
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit(act);
      const Transition ta = a.step(u), tb = b.step(u);
      CHECK(ta.r == tb.r);
      CHECK(ta.s_next == tb.s_next);
      CHECK(ta.r <= 0.0);
      CHECK((ta.s_next.array() >= 0.0).all());
      CHECK((ta.s_next.array() <= 1.0).all());
      if (ta.reason != DoneReason::Divergence) {
        CHECK(ta.r == doctest::Approx(a.reward_for_state(a.last_info().applied)).epsilon(1e-15));
      }
      CHECK(a.last_info().applied.nu.cwiseAbs().maxCoeff() <= cfg.actuators.nu_max);
      CHECK(a.last_info().applied.u.cwiseAbs().maxCoeff() <= cfg.actuators.u_max);
      if (ta.done) break;
    }
  }
}

TEST_CASE("divergence ends the episode below the reward floor") {
  EnvConfig cfg;
  cfg.episode.theta1 = 2.0;
  FormationEnv env(EnvKind::Tether, cfg);
  InitialStates init{50.0, desired_tether_state(50.0, cfg.reference), desired_satellite(50.0, cfg.reference)};
  init.tether.length.array() += 1.99;
  init.tether.speed.setConstant(10.0);
  env.reset_to(init);
  // Paying out fast pushes the length error past the threshold.
  const VecX pull = VecX::Ones(3);
  Transition tr;
  for (int k = 0; k < 100; ++k) {
    tr = env.step(pull);
    if (tr.done) break;
  }
  REQUIRE(tr.done);
  CHECK(tr.reason == DoneReason::Divergence);
  CHECK(tr.terminal());
  CHECK(tr.r < cfg.reward.tether_floor());
  CHECK(env.last_info().penalty < 0.0);
}

TEST_CASE("horizon is reached on the control grid") {
  EnvConfig cfg;
  cfg.reference.t_final = 5.0;
  FormationEnv env(EnvKind::Tether, cfg);
  env.reset_to({0.0, desired_tether_state(0.0, cfg.reference), desired_satellite(0.0, cfg.reference)});
  int steps = 0;
  Transition tr;
  do {
    tr = env.step(env.zero_action());
    ++steps;
  } while (!tr.done);
  CHECK(steps == env.horizon_steps());
  CHECK((tr.reason == DoneReason::Horizon || tr.reason == DoneReason::Goal));
  CHECK(!tr.terminal());
}
