#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ttfs/env.hpp"
#include "ttfs/nn.hpp"

namespace ttfs {

struct SacConfig {
  double gamma = 0.99;
  double lr = 3e-5;
  int batch_size = 256;
  std::int64_t total_steps = 10'000'000;
  double tau = 0.005;
  /// NaN selects -(action dimension).
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  double initial_temperature = 0.1;
  int updates_per_step = 1;
  std::int64_t warmup_steps = 5000;
  double grad_clip = 10.0;
  std::vector<int> hidden{256, 256};
  std::size_t buffer_capacity = 1'000'000;
  int max_nonfinite_events = 100;

  void validate() const;
  double resolved_target_entropy(int action_dim) const {
    return std::isnan(target_entropy) ? -static_cast<double>(action_dim) : target_entropy;
  }
};

/// Fixed-capacity FIFO of transitions with uniform sampling.
class ReplayBuffer {
 public:
  struct Batch {
    MatX s;         // obs x N
    MatX a;         // act x N
    VecX r;         // N
    MatX s_next;    // obs x N
    VecX terminal;  // N, 1 where bootstrapping is cut
  };

  ReplayBuffer(int obs_dim, int act_dim, std::size_t capacity);

  /// Throws std::invalid_argument for malformed transitions.
  void push(const Transition& tr);
  Batch sample(int n, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& slots) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Slot that holds the i-th oldest entry.
  std::size_t slot_of_oldest(std::size_t i) const;
  double reward_at(std::size_t slot) const { return r_[slot]; }

 private:
  int obs_dim_;
  int act_dim_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::vector<double> s_, a_, r_, s_next_, terminal_;
};

/// Actor, twin critics with targets, log-temperature and their optimizers.
struct SacAgent {
  SacAgent() = default;
  SacAgent(int obs_dim, int act_dim, const SacConfig& cfg, std::uint64_t seed);

  GaussianPolicy actor;
  Mlp q1, q2, q1_target, q2_target;
  double log_temperature = 0.0;
  OptimizerState actor_opt, q1_opt, q2_opt, temperature_opt;
  std::int64_t updates = 0;
  std::int64_t env_steps = 0;
  std::int64_t nonfinite_events = 0;
  std::uint64_t seed = 0;
  Rng rng;

  double temperature() const { return std::exp(log_temperature); }
  int obs_dim() const { return actor.obs_dim(); }
  int act_dim() const { return actor.action_dim(); }

  void save(std::ostream& os) const;
  static SacAgent load(std::istream& is);
  void save_file(const std::string& path) const;
  static SacAgent load_file(const std::string& path);
};

/// Critic input: observation rows followed by action rows.
MatX stack_inputs(const MatX& s, const MatX& a);

/// y = r + (1 - terminal) * gamma * (min(Q1', Q2')(s', a') - temperature * log pi(a'|s')),
/// with a' freshly sampled from the current actor.
VecX compute_target(const ReplayBuffer::Batch& batch, SacAgent& agent, const SacConfig& cfg);

struct CriticLosses {
  double q1 = 0.0;
  double q2 = 0.0;
};

/// One optimizer step per critic on (1/N) sum (y - Q)^2; returns pre-step losses.
CriticLosses critic_update(SacAgent& agent, const ReplayBuffer::Batch& batch, const VecX& y,
                           const SacConfig& cfg);

struct ActorResult {
  double loss = 0.0;
  VecX log_prob;  // of the re-sampled actions, before the step
};

/// One optimizer step on mean(temperature * log pi(a~|s) - min_p Q_p(s, a~)).
ActorResult actor_update(SacAgent& agent, const ReplayBuffer::Batch& batch, const SacConfig& cfg);

/// Gradient step on log temperature for mean(-temperature * (log pi + H0)).
double temperature_update(SacAgent& agent, const VecX& log_probs, const SacConfig& cfg);

void polyak_update(SacAgent& agent, double tau);

struct UpdateStats {
  CriticLosses critic;
  double actor_loss = 0.0;
  double temperature = 0.0;
  bool skipped = false;
};

/// Full gradient phase: target, critics, actor, temperature, polyak.
UpdateStats sac_update(SacAgent& agent, const ReplayBuffer& buffer, const SacConfig& cfg);

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Episode bookkeeping carried between train_step calls.
struct EpisodeState {
  VecX obs;
  bool needs_reset = true;
  double episode_reward = 0.0;
  int episode_length = 0;
  std::int64_t episodes_done = 0;
};

struct StepDiagnostics {
  bool updated = false;
  UpdateStats update;
  bool episode_finished = false;
  double episode_reward = 0.0;
  int episode_length = 0;
  DoneReason reason = DoneReason::None;
};

/// One interaction (uniform random action before warmup, stochastic policy
/// after) followed by the configured number of gradient phases.
/// `Env` must provide reset(Rng&) -> VecX and step(const VecX&) -> Transition.
template <typename Env>
StepDiagnostics train_step(SacAgent& agent, Env& env, ReplayBuffer& buffer, const SacConfig& cfg,
                           EpisodeState& episode) {
  StepDiagnostics diag;
  if (episode.needs_reset) {
    episode.obs = env.reset(agent.rng);
    episode.needs_reset = false;
    episode.episode_reward = 0.0;
    episode.episode_length = 0;
  }
  VecX action;
  if (agent.env_steps < cfg.warmup_steps) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    action.resize(agent.act_dim());
    for (Eigen::Index i = 0; i < action.size(); ++i) action(i) = unit(agent.rng);
  } else {
    action = agent.actor.act(episode.obs, agent.rng, false);
  }
  Transition tr = env.step(action);
  buffer.push(tr);
  ++agent.env_steps;
  episode.episode_reward += tr.r;
  ++episode.episode_length;
  episode.obs = tr.s_next;

  if (agent.env_steps >= cfg.warmup_steps && buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
    for (int k = 0; k < cfg.updates_per_step; ++k) {
      diag.update = sac_update(agent, buffer, cfg);
      diag.updated = true;
    }
    if (agent.nonfinite_events > cfg.max_nonfinite_events) {
      throw TrainingAborted("training aborted: too many non-finite updates");
    }
  }
  if (tr.done) {
    diag.episode_finished = true;
    diag.episode_reward = episode.episode_reward;
    diag.episode_length = episode.episode_length;
    diag.reason = tr.reason;
    ++episode.episodes_done;
    episode.needs_reset = true;
  }
  return diag;
}

}  // namespace ttfs
