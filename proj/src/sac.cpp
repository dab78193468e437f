#include "ttfs/sac.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ttfs/checkpoint.hpp"

namespace ttfs {

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("SacConfig: gamma must be in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("SacConfig: tau must be in (0, 1]");
  if (!(lr > 0.0)) throw std::invalid_argument("SacConfig: lr must be positive");
  if (batch_size <= 0 || static_cast<std::size_t>(batch_size) > buffer_capacity) {
    throw std::invalid_argument("SacConfig: batch size must be in [1, capacity]");
  }
  if (!(initial_temperature > 0.0)) throw std::invalid_argument("SacConfig: temperature must be positive");
  if (updates_per_step < 0) throw std::invalid_argument("SacConfig: updates_per_step must be >= 0");
}

ReplayBuffer::ReplayBuffer(int obs_dim, int act_dim, std::size_t capacity)
    : obs_dim_(obs_dim), act_dim_(act_dim), capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& tr) {
  if (tr.s.size() != obs_dim_ || tr.s_next.size() != obs_dim_ || tr.a.size() != act_dim_) {
    throw std::invalid_argument("ReplayBuffer::push: shape mismatch");
  }
  if (!tr.s.allFinite() || !tr.s_next.allFinite() || !std::isfinite(tr.r)) {
    throw std::invalid_argument("ReplayBuffer::push: non-finite transition");
  }
  if ((tr.a.array() < 0.0).any() || (tr.a.array() > 1.0).any()) {
    throw std::invalid_argument("ReplayBuffer::push: action outside [0, 1]");
  }
  if (tr.r > 0.0) throw std::invalid_argument("ReplayBuffer::push: reward must be <= 0");
  const std::size_t slot = cursor_;
  if (s_.size() < (slot + 1) * obs_dim_) {
    // Grow lazily so small runs do not reserve the full capacity.
    const std::size_t target = std::min(capacity_, std::max<std::size_t>(slot + 1, 2 * (s_.size() / obs_dim_)));
    s_.resize(target * obs_dim_);
    s_next_.resize(target * obs_dim_);
    a_.resize(target * act_dim_);
    r_.resize(target);
    terminal_.resize(target);
  }
  std::copy(tr.s.data(), tr.s.data() + obs_dim_, s_.begin() + slot * obs_dim_);
  std::copy(tr.s_next.data(), tr.s_next.data() + obs_dim_, s_next_.begin() + slot * obs_dim_);
  std::copy(tr.a.data(), tr.a.data() + act_dim_, a_.begin() + slot * act_dim_);
  r_[slot] = tr.r;
  terminal_[slot] = tr.terminal() ? 1.0 : 0.0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::slot_of_oldest(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::slot_of_oldest");
  const std::size_t start = size_ < capacity_ ? 0 : cursor_;
  return (start + i) % capacity_;
}

ReplayBuffer::Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const Eigen::Index n = static_cast<Eigen::Index>(slots.size());
  Batch b{MatX(obs_dim_, n), MatX(act_dim_, n), VecX(n), MatX(obs_dim_, n), VecX(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::size_t j = slots[k];
    if (j >= size_) throw std::out_of_range("ReplayBuffer::gather");
    b.s.col(k) = Eigen::Map<const VecX>(s_.data() + j * obs_dim_, obs_dim_);
    b.s_next.col(k) = Eigen::Map<const VecX>(s_next_.data() + j * obs_dim_, obs_dim_);
    b.a.col(k) = Eigen::Map<const VecX>(a_.data() + j * act_dim_, act_dim_);
    b.r(k) = r_[j];
    b.terminal(k) = terminal_[j];
  }
  return b;
}

ReplayBuffer::Batch ReplayBuffer::sample(int n, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = pick(rng);
  return gather(slots);
}

SacAgent::SacAgent(int obs_dim, int act_dim, const SacConfig& cfg, std::uint64_t seed_value)
    : seed(seed_value), rng(seed_value) {
  cfg.validate();
  actor = GaussianPolicy(obs_dim, act_dim, cfg.hidden, rng);
  std::vector<int> qw{obs_dim + act_dim};
  qw.insert(qw.end(), cfg.hidden.begin(), cfg.hidden.end());
  qw.push_back(1);
  q1 = Mlp(qw, rng);
  q2 = Mlp(qw, rng);
  q1_target = q1;
  q2_target = q2;
  log_temperature = std::log(cfg.initial_temperature);
  actor_opt = OptimizerState::for_size(actor.net().num_params(), cfg.lr);
  q1_opt = OptimizerState::for_size(q1.num_params(), cfg.lr);
  q2_opt = OptimizerState::for_size(q2.num_params(), cfg.lr);
  temperature_opt = OptimizerState::for_size(1, cfg.lr);
}

void SacAgent::save(std::ostream& os) const {
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  BinaryWriter w(os);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(act_dim()));
  w.mlp(actor.net());
  w.mlp(q1);
  w.mlp(q2);
  w.mlp(q1_target);
  w.mlp(q2_target);
  w.optimizer(actor_opt);
  w.optimizer(q1_opt);
  w.optimizer(q2_opt);
  w.optimizer(temperature_opt);
  w.f64(log_temperature);
  w.i64(updates);
  w.i64(env_steps);
  w.i64(nonfinite_events);
  w.u64(seed);
  std::ostringstream rs;
  rs << rng;
  w.str(rs.str());
}

SacAgent SacAgent::load(std::istream& is) {
  char magic[sizeof kCheckpointMagic];
  is.read(magic, sizeof magic);
  if (!is || !std::equal(magic, magic + sizeof magic, kCheckpointMagic)) {
    throw CheckpointError("not a checkpoint file");
  }
  BinaryReader r(is);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version");
  SacAgent a;
  const int act_dim = static_cast<int>(r.u32());
  Mlp actor_net = r.mlp();
  if (actor_net.output_dim() != 2 * act_dim) throw CheckpointError("checkpoint: actor head mismatch");
  a.actor = GaussianPolicy(std::move(actor_net), act_dim);
  a.q1 = r.mlp();
  a.q2 = r.mlp();
  a.q1_target = r.mlp();
  a.q2_target = r.mlp();
  a.actor_opt = r.optimizer();
  a.q1_opt = r.optimizer();
  a.q2_opt = r.optimizer();
  a.temperature_opt = r.optimizer();
  a.log_temperature = r.f64();
  a.updates = r.i64();
  a.env_steps = r.i64();
  a.nonfinite_events = r.i64();
  a.seed = r.u64();
  std::istringstream rs(r.str());
  rs >> a.rng;
  if (!rs) throw CheckpointError("checkpoint: bad RNG state");
  return a;
}

void SacAgent::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write checkpoint " + path);
  save(os);
  if (!os) throw CheckpointError("failed writing checkpoint " + path);
}

SacAgent SacAgent::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path);
  return load(is);
}

MatX stack_inputs(const MatX& s, const MatX& a) {
  MatX x(s.rows() + a.rows(), s.cols());
  x << s, a;
  return x;
}

VecX compute_target(const ReplayBuffer::Batch& batch, SacAgent& agent, const SacConfig& cfg) {
  const auto next = agent.actor.sample(batch.s_next, agent.rng, false);
  const MatX x = stack_inputs(batch.s_next, next.action);
  const VecX q1 = agent.q1_target.forward(x).row(0).transpose();
  const VecX q2 = agent.q2_target.forward(x).row(0).transpose();
  const VecX soft = q1.cwiseMin(q2) - agent.temperature() * next.log_prob;
  const VecX cont = VecX::Ones(batch.r.size()) - batch.terminal;
  return batch.r + cfg.gamma * cont.cwiseProduct(soft);
}

namespace {

double critic_step(Mlp& q, OptimizerState& opt, const MatX& x, const VecX& y, const SacConfig& cfg,
                   std::int64_t& nonfinite) {
  Mlp::Cache cache;
  const VecX pred = q.forward(x, &cache).row(0).transpose();
  const VecX diff = pred - y;
  const double n = static_cast<double>(y.size());
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) {
    ++nonfinite;
    return loss;
  }
  VecX grad;
  q.backward(cache, (2.0 / n) * diff.transpose(), grad);
  clip_grad_norm(grad, cfg.grad_clip);
  if (!adam_step(q.params(), grad, opt)) ++nonfinite;
  return loss;
}

}  // namespace

CriticLosses critic_update(SacAgent& agent, const ReplayBuffer::Batch& batch, const VecX& y,
                           const SacConfig& cfg) {
  const MatX x = stack_inputs(batch.s, batch.a);
  CriticLosses out;
  out.q1 = critic_step(agent.q1, agent.q1_opt, x, y, cfg, agent.nonfinite_events);
  out.q2 = critic_step(agent.q2, agent.q2_opt, x, y, cfg, agent.nonfinite_events);
  return out;
}

ActorResult actor_update(SacAgent& agent, const ReplayBuffer::Batch& batch, const SacConfig& cfg) {
  const auto smp = agent.actor.sample(batch.s, agent.rng, false);
  const MatX x = stack_inputs(batch.s, smp.action);
  Mlp::Cache c1, c2;
  const VecX q1 = agent.q1.forward(x, &c1).row(0).transpose();
  const VecX q2 = agent.q2.forward(x, &c2).row(0).transpose();
  const Eigen::Index n = x.cols();
  const double temp = agent.temperature();
  const VecX qmin = q1.cwiseMin(q2);

  ActorResult res;
  res.log_prob = smp.log_prob;
  res.loss = (temp * smp.log_prob - qmin).mean();
  if (!std::isfinite(res.loss)) {
    ++agent.nonfinite_events;
    return res;
  }
  // dL/dQ_p is -1/N where critic p attains the minimum.
  MatX up1 = MatX::Zero(1, n), up2 = MatX::Zero(1, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    if (q1(b) <= q2(b)) up1(0, b) = -1.0 / n;
    else up2(0, b) = -1.0 / n;
  }
  VecX scratch;
  const MatX dx1 = agent.q1.backward(c1, up1, scratch);
  scratch.resize(0);
  const MatX dx2 = agent.q2.backward(c2, up2, scratch);
  const MatX dloss_da = (dx1 + dx2).bottomRows(agent.act_dim());
  const VecX dloss_dlogp = VecX::Constant(n, temp / n);
  VecX grad = agent.actor.backward(smp, dloss_da, dloss_dlogp);
  clip_grad_norm(grad, cfg.grad_clip);
  if (!adam_step(agent.actor.net().params(), grad, agent.actor_opt)) ++agent.nonfinite_events;
  return res;
}

double temperature_update(SacAgent& agent, const VecX& log_probs, const SacConfig& cfg) {
  const double h0 = cfg.resolved_target_entropy(agent.act_dim());
  const double grad = -agent.temperature() * (log_probs.array() + h0).mean();
  VecX p = VecX::Constant(1, agent.log_temperature);
  if (!adam_step(p, VecX::Constant(1, grad), agent.temperature_opt)) ++agent.nonfinite_events;
  agent.log_temperature = p(0);
  return agent.temperature();
}

void polyak_update(SacAgent& agent, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau must be in (0, 1]");
  agent.q1_target.params() = tau * agent.q1.params() + (1.0 - tau) * agent.q1_target.params();
  agent.q2_target.params() = tau * agent.q2.params() + (1.0 - tau) * agent.q2_target.params();
}

UpdateStats sac_update(SacAgent& agent, const ReplayBuffer& buffer, const SacConfig& cfg) {
  UpdateStats st;
  const auto batch = buffer.sample(cfg.batch_size, agent.rng);
  const VecX y = compute_target(batch, agent, cfg);
  if (!y.allFinite()) {
    ++agent.nonfinite_events;
    st.skipped = true;
    st.temperature = agent.temperature();
    return st;
  }
  st.critic = critic_update(agent, batch, y, cfg);
  const ActorResult ar = actor_update(agent, batch, cfg);
  st.actor_loss = ar.loss;
  st.temperature = temperature_update(agent, ar.log_prob, cfg);
  polyak_update(agent, cfg.tau);
  ++agent.updates;
  return st;
}

}  // namespace ttfs
