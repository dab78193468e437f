#pragma once

// Independent numerical oracles shared by the unit tests and the acceptance
// binary.

#include <algorithm>
#include <cmath>

#include "ttfs/nn.hpp"

namespace oracles {

using ttfs::MatX;
using ttfs::Mlp;
using ttfs::VecX;

/// Smallest |pre-activation| over the hidden layers; finite differences
/// across a rectifier kink are meaningless, so callers redraw below a margin.
inline double kink_margin(const Mlp& net, const MatX& X) {
  Mlp::Cache cache;
  net.forward(X, &cache);
  double m = INFINITY;
  for (int l = 0; l + 1 < net.num_layers(); ++l) m = std::min(m, cache.pre[l].cwiseAbs().minCoeff());
  return m;
}

/// Relative error ||g - g_fd|| / max(||g||, ||g_fd||) of the parameter
/// gradient of sum(upstream .* net(X)) against central differences, and the
/// same for the input gradient.
struct GradientCheck {
  double params = 0.0;
  double input = 0.0;
};

inline GradientCheck check_mlp_gradients(Mlp net, const MatX& X, const MatX& upstream, double h = 1e-5) {
  Mlp::Cache cache;
  net.forward(X, &cache);
  VecX grad;
  const MatX dX = net.backward(cache, upstream, grad);

  auto loss = [&](const Mlp& n, const MatX& x) { return (n.forward(x).array() * upstream.array()).sum(); };
  VecX fd(net.num_params());
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    const double keep = net.params()(i);
    net.params()(i) = keep + h;
    const double up = loss(net, X);
    net.params()(i) = keep - h;
    const double down = loss(net, X);
    net.params()(i) = keep;
    fd(i) = (up - down) / (2.0 * h);
  }
  MatX fdx(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      MatX xp = X, xm = X;
      xp(r, c) += h;
      xm(r, c) -= h;
      fdx(r, c) = (loss(net, xp) - loss(net, xm)) / (2.0 * h);
    }
  }
  auto rel = [](double diff, double a, double b) { return diff / std::max({a, b, 1e-12}); };
  return {rel((grad - fd).norm(), grad.norm(), fd.norm()), rel((dX - fdx).norm(), dX.norm(), fdx.norm())};
}

/// Trapezoid integral of exp(log_density) over (0, 1) for a 1-D policy.
inline double squashed_density_integral(const ttfs::GaussianPolicy& pi, const VecX& obs, int points = 200000) {
  const double lo = 1e-12, hi = 1.0 - 1e-12;
  const double step = (hi - lo) / points;
  double sum = 0.0;
  double prev = std::exp(pi.log_density(obs, VecX::Constant(1, lo)));
  for (int k = 1; k <= points; ++k) {
    const double cur = std::exp(pi.log_density(obs, VecX::Constant(1, lo + k * step)));
    sum += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  return sum;
}

}  // namespace oracles
