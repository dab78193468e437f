#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ttfs/types.hpp"

namespace ttfs {

using Rng = std::mt19937_64;

/// Fully connected network with ReLU hidden layers and a linear output.
/// All parameters live in one contiguous vector, layer by layer: the weight
/// matrix (out x in, column-major) followed by the bias.
class Mlp {
 public:
  struct Cache {
    std::vector<MatX> inputs;  // input to each layer (post-activation of previous)
    std::vector<MatX> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> widths);
  /// Uniform fan-in initialization; the last layer is multiplied by
  /// `last_layer_scale`.
  Mlp(std::vector<int> widths, Rng& rng, double last_layer_scale = 1.0);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }

  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  Eigen::Map<MatX> weight(int layer);
  Eigen::Map<const MatX> weight(int layer) const;
  Eigen::Map<VecX> bias(int layer);
  Eigen::Map<const VecX> bias(int layer) const;

  /// Batched forward pass; columns of `X` are samples.
  MatX forward(const MatX& X, Cache* cache = nullptr) const;
  VecX forward(const VecX& x) const;

  /// Reverse-mode pass. Adds parameter gradients into `grad` (resized and
  /// zeroed if empty) and returns the gradient with respect to the input.
  MatX backward(const Cache& cache, const MatX& upstream, VecX& grad) const;

 private:
  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;
  VecX params_;
};

/// Tanh-squashed Gaussian policy mapped onto [0, 1]^d. The network emits
/// the mean in rows [0, d) and the log standard deviation in rows [d, 2d).
class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;

  struct Sample {
    MatX action;    // d x B, in [0, 1]
    VecX log_prob;  // B
    // Saved for the reparameterized backward pass.
    Mlp::Cache cache;
    MatX mean, log_std, noise, tanh_z;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> log_std_active;
  };

  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden, Rng& rng);
  GaussianPolicy(Mlp net, int action_dim) : net_(std::move(net)), action_dim_(action_dim) {}

  int obs_dim() const { return net_.input_dim(); }
  int action_dim() const { return action_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  /// Stochastic (reparameterized) sample, or the squashed mean when
  /// `deterministic` is set (log_prob is then evaluated at the mean).
  Sample sample(const MatX& obs, Rng& rng, bool deterministic = false) const;
  VecX act(const VecX& obs, Rng& rng, bool deterministic) const;
  VecX act_deterministic(const VecX& obs) const;

  /// Gradient of sum_b [dL/da_b . a_b + dL/dlogp_b * logp_b] with respect to
  /// the network parameters, for the noise saved in `s`.
  VecX backward(const Sample& s, const MatX& dloss_daction, const VecX& dloss_dlogp) const;

  /// Log density of `action` in [0,1]^d under the policy at a single `obs`.
  double log_density(const VecX& obs, const VecX& action) const;

 private:
  Mlp net_;
  int action_dim_ = 0;
};

/// Single-observation wrapper around GaussianPolicy::sample.
struct SquashedSample {
  VecX action;
  double log_prob;
};
SquashedSample sample_squashed(const GaussianPolicy& head, const VecX& obs, Rng& rng,
                               bool deterministic);

/// Adaptive-moment optimizer state for one parameter vector.
struct OptimizerState {
  VecX m;
  VecX v;
  std::int64_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t skipped = 0;

  static OptimizerState for_size(Eigen::Index n, double lr);
};

/// Returns false (and counts a skip) when the gradient is not finite.
bool adam_step(VecX& params, const VecX& grads, OptimizerState& opt);

/// Rescales `grad` to at most `max_norm`; returns the norm before clipping.
double clip_grad_norm(VecX& grad, double max_norm);

/// Numerically stable log(1 - tanh(z)^2).
double log1m_tanh2(double z);

}  // namespace ttfs
