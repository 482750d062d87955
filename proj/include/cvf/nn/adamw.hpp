#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/nn/mlp.hpp"

namespace cvf::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Moment estimates, flattened in MlpParams::for_each order.
struct AdamWState {
  std::uint64_t step = 0;
  std::vector<double> m, v;

  friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

/// One decoupled-weight-decay Adam update in place.
inline void adamw_step(MlpParams& params, const MlpParams& grads, AdamWState& state, double lr,
                       const AdamWConfig& cfg = {}) {
  const std::size_t n = params.parameter_count();
  if (grads.parameter_count() != n) throw ShapeError("gradient structure does not match parameters");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) throw ShapeError("optimizer state does not match parameters");

  std::vector<double> g;
  g.reserve(n);
  grads.for_each([&](double x) { g.push_back(x); });

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  std::size_t k = 0;
  params.for_each([&](double& p) {
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g[k];
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    p -= lr * (mhat / (std::sqrt(vhat) + cfg.epsilon) + cfg.weight_decay * p);
    ++k;
  });
}

}  // namespace cvf::nn
