#include "ttfs/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ttfs {

namespace {

std::vector<Eigen::Index> layer_offsets(const std::vector<int>& widths) {
  std::vector<Eigen::Index> offsets{0};
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    offsets.push_back(offsets.back() + static_cast<Eigen::Index>(widths[l + 1]) * (widths[l] + 1));
  }
  return offsets;
}

}  // namespace

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (int w : widths_) {
    if (w <= 0) throw std::invalid_argument("Mlp: widths must be positive");
  }
  offsets_ = layer_offsets(widths_);
  params_ = VecX::Zero(offsets_.back());
}

Mlp::Mlp(std::vector<int> widths, Rng& rng, double last_layer_scale) : Mlp(std::move(widths)) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const double scale = (l + 1 == num_layers()) ? last_layer_scale : 1.0;
    auto W = weight(l);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = scale * dist(rng);
    auto b = bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = scale * dist(rng);
  }
}

Eigen::Map<MatX> Mlp::weight(int l) {
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<const MatX> Mlp::weight(int l) const {
  return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}
Eigen::Map<VecX> Mlp::bias(int l) {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l],
          widths_[l + 1]};
}
Eigen::Map<const VecX> Mlp::bias(int l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l],
          widths_[l + 1]};
}

MatX Mlp::forward(const MatX& X, Cache* cache) const {
  if (X.rows() != input_dim()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  if (cache) {
    cache->inputs.resize(num_layers());
    cache->pre.resize(num_layers());
  }
  MatX h = X;
  for (int l = 0; l < num_layers(); ++l) {
    MatX z = weight(l) * h;
    z.colwise() += bias(l);
    if (cache) {
      cache->inputs[l] = h;
      cache->pre[l] = z;
    }
    h = (l + 1 < num_layers()) ? MatX(z.cwiseMax(0.0)) : z;
  }
  return h;
}

VecX Mlp::forward(const VecX& x) const {
  return forward(MatX(x)).col(0);
}

MatX Mlp::backward(const Cache& cache, const MatX& upstream, VecX& grad) const {
  if (upstream.rows() != output_dim() || cache.inputs.size() != static_cast<std::size_t>(num_layers())) {
    throw std::invalid_argument("Mlp::backward: shape mismatch");
  }
  if (grad.size() != num_params()) grad = VecX::Zero(num_params());
  MatX delta = upstream;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (l + 1 < num_layers()) {
      delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    Eigen::Map<MatX> gW(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
    Eigen::Map<VecX> gb(grad.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l],
                        widths_[l + 1]);
    gW.noalias() += delta * cache.inputs[l].transpose();
    gb += delta.rowwise().sum();
    delta = weight(l).transpose() * delta;
  }
  return delta;
}

double log1m_tanh2(double z) {
  // 1 - tanh^2 z = 4 e^{-2|z|} / (1 + e^{-2|z|})^2
  const double a = std::abs(z);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

GaussianPolicy::GaussianPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng)
    : action_dim_(action_dim) {
  std::vector<int> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * action_dim);
  net_ = Mlp(widths, rng, 0.01);
}

GaussianPolicy::Sample GaussianPolicy::sample(const MatX& obs, Rng& rng, bool deterministic) const {
  Sample s;
  const MatX out = net_.forward(obs, &s.cache);
  const Eigen::Index d = action_dim_;
  const Eigen::Index B = obs.cols();
  s.mean = out.topRows(d);
  const MatX raw_log_std = out.bottomRows(d);
  s.log_std = raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  s.log_std_active = (raw_log_std.array() > kLogStdMin) && (raw_log_std.array() < kLogStdMax);
  s.noise = MatX::Zero(d, B);
  if (!deterministic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (Eigen::Index i = 0; i < d; ++i) s.noise(i, b) = normal(rng);
    }
  }
  const MatX z = s.mean + s.log_std.array().exp().matrix().cwiseProduct(s.noise);
  s.tanh_z = z.array().tanh().matrix();
  s.action = (s.tanh_z.array() + 1.0) * 0.5;
  s.log_prob = VecX::Zero(B);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index b = 0; b < B; ++b) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      lp += -0.5 * s.noise(i, b) * s.noise(i, b) - s.log_std(i, b) - half_log_2pi -
            log1m_tanh2(z(i, b)) + std::numbers::ln2;
    }
    s.log_prob(b) = lp;
  }
  return s;
}

VecX GaussianPolicy::act(const VecX& obs, Rng& rng, bool deterministic) const {
  return sample(MatX(obs), rng, deterministic).action.col(0);
}

VecX GaussianPolicy::act_deterministic(const VecX& obs) const {
  const VecX out = net_.forward(obs);
  return ((out.head(action_dim_).array().tanh() + 1.0) * 0.5).matrix();
}

VecX GaussianPolicy::backward(const Sample& s, const MatX& dloss_daction,
                              const VecX& dloss_dlogp) const {
  const Eigen::Index d = action_dim_;
  const Eigen::Index B = s.action.cols();
  MatX upstream(2 * d, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double t = s.tanh_z(i, b);
      const double sigma = std::exp(s.log_std(i, b));
      // d logp / dz = 2 tanh z ; d a / dz = (1 - tanh^2 z) / 2
      const double dz = dloss_dlogp(b) * 2.0 * t + dloss_daction(i, b) * 0.5 * (1.0 - t * t);
      upstream(i, b) = dz;
      const double dls = dz * sigma * s.noise(i, b) - dloss_dlogp(b);
      upstream(d + i, b) = s.log_std_active(i, b) ? dls : 0.0;
    }
  }
  VecX grad;
  net_.backward(s.cache, upstream, grad);
  return grad;
}

double GaussianPolicy::log_density(const VecX& obs, const VecX& action) const {
  const VecX out = net_.forward(obs);
  double lp = 0.0;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < action_dim_; ++i) {
    const double mean = out(i);
    const double log_std = std::clamp(out(action_dim_ + i), kLogStdMin, kLogStdMax);
    const double a = action(i);
    if (a <= 0.0 || a >= 1.0) return -std::numeric_limits<double>::infinity();
    const double z = std::atanh(2.0 * a - 1.0);
    const double xi = (z - mean) / std::exp(log_std);
    lp += -0.5 * xi * xi - log_std - half_log_2pi - log1m_tanh2(z) + std::numbers::ln2;
  }
  return lp;
}

SquashedSample sample_squashed(const GaussianPolicy& head, const VecX& obs, Rng& rng,
                               bool deterministic) {
  const auto s = head.sample(MatX(obs), rng, deterministic);
  return {s.action.col(0), s.log_prob(0)};
}

OptimizerState OptimizerState::for_size(Eigen::Index n, double lr) {
  OptimizerState o;
  o.m = VecX::Zero(n);
  o.v = VecX::Zero(n);
  o.lr = lr;
  return o;
}

bool adam_step(VecX& params, const VecX& grads, OptimizerState& opt) {
  if (params.size() != grads.size() || opt.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    ++opt.skipped;
    return false;
  }
  ++opt.step;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  params.array() -= opt.lr * (opt.m.array() / c1) / ((opt.v.array() / c2).sqrt() + opt.eps);
  return true;
}

double clip_grad_norm(VecX& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

}  // namespace ttfs
