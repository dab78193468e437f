#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ttfs/sac.hpp"

using namespace ttfs;

namespace {

Transition make(int obs, int act, double r, double fill, DoneReason reason = DoneReason::None) {
  Transition t;
  t.s = VecX::Constant(obs, fill);
  t.a = VecX::Constant(act, 0.5);
  t.r = r;
  t.s_next = VecX::Constant(obs, fill * 0.5);
  t.reason = reason;
  t.done = reason != DoneReason::None;
  return t;
}

SacConfig small_config() {
  SacConfig c;
  c.hidden = {16, 16};
  c.batch_size = 8;
  c.lr = 1e-3;
  c.warmup_steps = 0;
  c.buffer_capacity = 1000;
  return c;
}

ReplayBuffer filled(int obs, int act, int n, Rng& rng) {
  ReplayBuffer buf(obs, act, 1000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.s = VecX(obs);
    t.s_next = VecX(obs);
    t.a = VecX(act);
    for (int k = 0; k < obs; ++k) {
      t.s(k) = unit(rng);
      t.s_next(k) = unit(rng);
    }
    for (int k = 0; k < act; ++k) t.a(k) = unit(rng);
    t.r = -unit(rng);
    t.reason = (i % 5 == 0) ? DoneReason::Divergence : (i % 7 == 0 ? DoneReason::Horizon : DoneReason::None);
    t.done = t.reason != DoneReason::None;
    buf.push(t);
  }
  return buf;
}

bool same_params(const Mlp& a, const Mlp& b) { return a.params() == b.params(); }

}  // namespace

TEST_CASE("replay buffer evicts the oldest entry first") {
  ReplayBuffer buf(2, 1, 5);
  for (int i = 0; i < 6; ++i) buf.push(make(2, 1, -static_cast<double>(i), 0.1 * i));
  CHECK(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.reward_at(buf.slot_of_oldest(i)) == -static_cast<double>(i + 1));

  ReplayBuffer one(2, 1, 10);
  one.push(make(2, 1, -0.25, 0.3));
  Rng rng(1);
  const auto b = one.sample(1, rng);
  CHECK(b.r(0) == -0.25);
  CHECK(b.s(0, 0) == 0.3);
}

TEST_CASE("replay buffer rejects malformed transitions") {
  ReplayBuffer buf(2, 1, 5);
  CHECK_THROWS_AS(buf.push(make(3, 1, -1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(buf.push(make(2, 1, 0.5, 0.0)), std::invalid_argument);
  Transition bad = make(2, 1, -1.0, 0.0);
  bad.a(0) = 1.5;
  CHECK_THROWS_AS(buf.push(bad), std::invalid_argument);
  bad = make(2, 1, -1.0, 0.0);
  bad.s_next(1) = std::nan("");
  CHECK_THROWS_AS(buf.push(bad), std::invalid_argument);
  CHECK(buf.size() == 0);
}

TEST_CASE("replay sampling is uniform") {
  ReplayBuffer buf(1, 1, 10);
  for (int i = 0; i < 10; ++i) buf.push(make(1, 1, -static_cast<double>(i), 0.0));
  Rng rng(12);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  const auto b = buf.sample(draws, rng);
  for (int k = 0; k < draws; ++k) ++counts[static_cast<int>(-b.r(k))];
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - draws * 0.1) < 3.0 * sigma);
}

TEST_CASE("targets: discount zero, terminal cut and degenerate critics") {
  Rng data(4);
  ReplayBuffer buf = filled(3, 2, 50, data);
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 7);
  const auto batch = buf.sample(32, data);

  SacConfig g0 = cfg;
  g0.gamma = 0.0;
  CHECK(compute_target(batch, agent, g0) == batch.r);

  const VecX y = compute_target(batch, agent, cfg);
  for (Eigen::Index k = 0; k < batch.r.size(); ++k) {
    if (batch.terminal(k) == 1.0) CHECK(y(k) == batch.r(k));
  }

  // Equal target critics and zero temperature leave r + gamma q.
  agent.q2_target = agent.q1_target;
  agent.log_temperature = -INFINITY;
  Rng replay = agent.rng;
  const VecX y2 = compute_target(batch, agent, cfg);
  const auto next = agent.actor.sample(batch.s_next, replay, false);
  const VecX q = agent.q1_target.forward(stack_inputs(batch.s_next, next.action)).row(0).transpose();
  for (Eigen::Index k = 0; k < batch.r.size(); ++k) {
    const double expected = batch.r(k) + (1.0 - batch.terminal(k)) * cfg.gamma * q(k);
    CHECK(y2(k) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("targets use the pointwise minimum of the two target critics") {
  Rng data(5);
  ReplayBuffer buf = filled(3, 2, 50, data);
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 8);
  const auto batch = buf.sample(64, data);
  Rng replay = agent.rng;
  const VecX y = compute_target(batch, agent, cfg);
  const auto next = agent.actor.sample(batch.s_next, replay, false);
  const MatX x = stack_inputs(batch.s_next, next.action);
  const VecX q1 = agent.q1_target.forward(x).row(0).transpose();
  const VecX q2 = agent.q2_target.forward(x).row(0).transpose();
  int picked1 = 0, picked2 = 0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double m = std::min(q1(k), q2(k));
    (q1(k) < q2(k) ? picked1 : picked2)++;
    const double expected =
        batch.r(k) + (1.0 - batch.terminal(k)) * cfg.gamma * (m - agent.temperature() * next.log_prob(k));
    CHECK(y(k) == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(picked1 + picked2 == y.size());
}

TEST_CASE("critic update: loss recomputation, fit and frozen targets") {
  Rng data(6);
  ReplayBuffer buf = filled(3, 2, 50, data);
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 9);
  const auto batch = buf.sample(16, data);
  const VecX y = compute_target(batch, agent, cfg);
  const MatX x = stack_inputs(batch.s, batch.a);
  const VecX q1 = agent.q1.forward(x).row(0).transpose();
  const double expected = (y - q1).squaredNorm() / static_cast<double>(y.size());
  const Mlp t1 = agent.q1_target, t2 = agent.q2_target;
  const CriticLosses l = critic_update(agent, batch, y, cfg);
  CHECK(std::abs(l.q1 - expected) < 1e-12);
  CHECK(same_params(agent.q1_target, t1));
  CHECK(same_params(agent.q2_target, t2));

  // Single-transition regression.
  const auto one = buf.gather({3});
  const VecX y1 = VecX::Constant(1, -2.0);
  double first = critic_update(agent, one, y1, cfg).q1;
  double last = first;
  for (int k = 0; k < 500; ++k) last = critic_update(agent, one, y1, cfg).q1;
  CHECK(last < 0.1 * first);

  // A critic that already outputs y does not move.
  SacAgent exact(3, 2, cfg, 10);
  exact.q1.weight(exact.q1.num_layers() - 1).setZero();
  exact.q1.bias(exact.q1.num_layers() - 1)(0) = -2.0;
  const VecX before = exact.q1.params();
  CHECK(critic_update(exact, one, y1, cfg).q1 == 0.0);
  CHECK(exact.q1.params() == before);
}

TEST_CASE("actor update leaves every critic untouched") {
  Rng data(7);
  ReplayBuffer buf = filled(3, 2, 50, data);
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 11);
  const Mlp q1 = agent.q1, q2 = agent.q2, t1 = agent.q1_target, t2 = agent.q2_target;
  const VecX actor_before = agent.actor.net().params();
  const auto batch = buf.sample(16, data);
  actor_update(agent, batch, cfg);
  temperature_update(agent, VecX::Constant(4, 0.3), cfg);
  CHECK(same_params(agent.q1, q1));
  CHECK(same_params(agent.q2, q2));
  CHECK(same_params(agent.q1_target, t1));
  CHECK(same_params(agent.q2_target, t2));
  CHECK(agent.actor.net().params() != actor_before);
}

TEST_CASE("flat objective: zero temperature and action-independent critics") {
  Rng data(8);
  ReplayBuffer buf = filled(3, 2, 50, data);
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 12);
  for (Mlp* q : {&agent.q1, &agent.q2}) {
    q->weight(q->num_layers() - 1).setZero();
    q->bias(q->num_layers() - 1)(0) = -1.0;
  }
  agent.log_temperature = -INFINITY;
  const VecX before = agent.actor.net().params();
  actor_update(agent, buf.sample(16, data), cfg);
  CHECK((agent.actor.net().params() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a larger temperature leaves a more spread-out policy") {
  Rng data(9);
  ReplayBuffer buf = filled(3, 1, 64, data);
  SacConfig cfg = small_config();
  cfg.lr = 3e-3;
  const auto batch = buf.gather([] {
    std::vector<std::size_t> s(64);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
    return s;
  }());
  auto entropy_after = [&](double temperature) {
    SacAgent agent(3, 1, cfg, 21);
    agent.log_temperature = std::log(temperature);
    for (int k = 0; k < 300; ++k) actor_update(agent, batch, cfg);
    Rng probe(5);
    double h = 0.0;
    for (int rep = 0; rep < 20; ++rep) h -= agent.actor.sample(batch.s, probe, false).log_prob.mean();
    return h / 20.0;
  };
  CHECK(entropy_after(1.0) > entropy_after(0.001));
}

TEST_CASE("temperature update") {
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 13);
  const double h0 = cfg.resolved_target_entropy(2);
  CHECK(h0 == -2.0);
  const double start = agent.log_temperature;
  temperature_update(agent, VecX::Constant(8, -h0), cfg);
  CHECK(agent.log_temperature == start);
  // Entropy far below target (log-probs large) raises the temperature.
  const double t0 = agent.temperature();
  temperature_update(agent, VecX::Constant(8, 10.0), cfg);
  CHECK(agent.temperature() > t0);
  temperature_update(agent, VecX::Constant(8, -10.0), cfg);
  temperature_update(agent, VecX::Constant(8, -10.0), cfg);
  CHECK(agent.temperature() > 0.0);
}

TEST_CASE("polyak averaging") {
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 14);
  agent.q1.params().array() += 0.5;
  polyak_update(agent, 1.0);
  CHECK(agent.q1_target.params() == agent.q1.params());
  CHECK(agent.q2_target.params() == agent.q2.params());

  agent.q1.params().setOnes();
  agent.q1_target.params().setZero();
  polyak_update(agent, 0.5);
  polyak_update(agent, 0.5);
  CHECK((agent.q1_target.params().array() == 0.75).all());

  agent.q1_target.params().setZero();
  double prev = (agent.q1_target.params() - agent.q1.params()).norm();
  for (int k = 0; k < 200; ++k) {
    polyak_update(agent, 0.005);
    const double gap = (agent.q1_target.params() - agent.q1.params()).norm();
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev == doctest::Approx(std::pow(0.995, 200) * std::sqrt(agent.q1.num_params())).epsilon(1e-9));
  CHECK_THROWS(polyak_update(agent, 0.0));
}

namespace {

/// One-state bandit with a terminal step; reward -(a - 0.7)^2.
struct Bandit {
  VecX reset(Rng&) { return VecX::Constant(1, 0.5); }
  Transition step(const VecX& a) {
    Transition t;
    t.s = VecX::Constant(1, 0.5);
    t.a = a;
    t.r = -(a(0) - 0.7) * (a(0) - 0.7);
    t.s_next = t.s;
    t.done = true;
    t.reason = DoneReason::Horizon;
    return t;
  }
};

}  // namespace

TEST_CASE("warmup collects data without touching parameters") {
  SacConfig cfg = small_config();
  cfg.warmup_steps = 20;
  SacAgent agent(1, 1, cfg, 15);
  const SacAgent start = agent;
  ReplayBuffer buf(1, 1, 100);
  Bandit env;
  EpisodeState ep;
  for (int k = 0; k < 19; ++k) {
    const auto d = train_step(agent, env, buf, cfg, ep);
    CHECK_FALSE(d.updated);
  }
  CHECK(buf.size() == 19);
  CHECK(agent.actor.net().params() == start.actor.net().params());
  CHECK(same_params(agent.q1, start.q1));
  CHECK(agent.log_temperature == start.log_temperature);
  CHECK(train_step(agent, env, buf, cfg, ep).updated);
}

TEST_CASE("training is a pure function of the seed") {
  SacConfig cfg = small_config();
  cfg.warmup_steps = 10;
  auto run = [&] {
    SacAgent agent(1, 1, cfg, 16);
    ReplayBuffer buf(1, 1, 100);
    Bandit env;
    EpisodeState ep;
    std::vector<double> trace;
    for (int k = 0; k < 200; ++k) {
      const auto d = train_step(agent, env, buf, cfg, ep);
      trace.push_back(d.update.critic.q1);
      trace.push_back(d.update.actor_loss);
      trace.push_back(d.episode_reward);
    }
    return trace;
  };
  CHECK(run() == run());
}

TEST_CASE("agent checkpoint round-trips bit for bit") {
  SacConfig cfg = small_config();
  SacAgent agent(3, 2, cfg, 17);
  Rng data(3);
  ReplayBuffer buf = filled(3, 2, 50, data);
  for (int k = 0; k < 5; ++k) sac_update(agent, buf, cfg);
  std::stringstream first;
  agent.save(first);
  SacAgent back = SacAgent::load(first);
  std::stringstream second;
  back.save(second);
  CHECK(first.str() == second.str());
  CHECK(back.updates == 5);
  // The restored RNG continues the same stream.
  CHECK(back.rng() == agent.rng());

  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS(SacAgent::load(junk));
}

TEST_CASE("configuration validation") {
  SacConfig c;
  c.gamma = 1.0;
  CHECK_THROWS(c.validate());
  c = SacConfig{};
  c.tau = 0.0;
  CHECK_THROWS(c.validate());
  c = SacConfig{};
  c.batch_size = 10;
  c.buffer_capacity = 5;
  CHECK_THROWS(c.validate());
}
