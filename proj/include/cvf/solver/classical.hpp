#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/field.hpp"
#include "cvf/solver/rollout.hpp"

namespace cvf {

enum class FixedScheme { euler, rk4 };

inline std::string to_string(FixedScheme s) { return s == FixedScheme::euler ? "euler" : "rk4"; }

namespace detail {

inline std::vector<double> axpy(std::span<const double> y, double h, std::span<const double> k) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * k[i];
  return out;
}

}  // namespace detail

/// Fixed-step Euler or classical RK4 on a tangent field, physical units.
/// The last step is shortened to land on the horizon.
template <TangentField F>
RolloutResult rollout_fixed(const F& f, std::span<const double> s0, double horizon, double dt, FixedScheme scheme,
                            double divergence_bound = kDefaultDivergenceBound) {
  detail::check_horizon(horizon);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("fixed step must be positive");
  auto res = detail::start_rollout(s0);
  std::vector<double> y(s0.begin(), s0.end());
  const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  for (std::size_t k = 0; k < n; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    const double h = k + 1 == n ? horizon - t0 : dt;
    std::size_t nfe = 0;
    if (scheme == FixedScheme::euler) {
      const auto k1 = f(y);
      nfe = 1;
      y = detail::axpy(y, h, k1);
    } else {
      const auto k1 = f(y);
      const auto k2 = f(detail::axpy(y, 0.5 * h, k1));
      const auto k3 = f(detail::axpy(y, 0.5 * h, k2));
      const auto k4 = f(detail::axpy(y, h, k3));
      nfe = 4;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!detail::record_step(res, k + 1 == n ? horizon : t0 + h, y, h, nfe, divergence_bound)) break;
  }
  return res;
}

struct Rk45Config {
  double atol = 1e-4;
  double rtol = 1e-3;
  double safety = 0.9;
  double min_factor = 0.2;
  double max_factor = 5.0;
  double initial_dt = 0.0;  // 0: attempt the whole horizon first
  std::size_t max_steps = 1000000;
  double divergence_bound = kDefaultDivergenceBound;
};

/// Dormand-Prince 5(4) with first-same-as-last reuse and the elementary
/// controller h <- h * clamp(safety * err^(-1/5)). NFE counts every stage,
/// rejected attempts included.
template <TangentField F>
RolloutResult rollout_adaptive_rk45(const F& f, std::span<const double> s0, double horizon,
                                    const Rk45Config& cfg = {}) {
  detail::check_horizon(horizon);
  if (!(cfg.atol > 0.0) || !(cfg.rtol >= 0.0)) throw ParameterError("rk45 tolerances must be positive");
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat for the embedded fourth-order solution.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;

  auto res = detail::start_rollout(s0);
  const std::size_t d = s0.size();
  std::vector<double> y(s0.begin(), s0.end());
  auto combo = [&](std::initializer_list<std::pair<double, const std::vector<double>*>> terms, double h) {
    std::vector<double> out = y;
    for (const auto& [w, k] : terms)
      for (std::size_t i = 0; i < d; ++i) out[i] += h * w * (*k)[i];
    return out;
  };

  double t = 0.0;
  double h = cfg.initial_dt > 0.0 ? std::min(cfg.initial_dt, horizon) : horizon;
  auto k1 = f(y);
  std::size_t pending_nfe = 1;
  std::size_t attempts = 0;
  while (horizon - t > detail::kHorizonSlack * horizon) {
    if (++attempts > cfg.max_steps) {
      res.diverged = true;
      res.note = "rk45 exceeded the step budget";
      break;
    }
    const bool last = h >= horizon - t;
    if (last) h = horizon - t;
    const auto k2 = f(combo({{a21, &k1}}, h));
    const auto k3 = f(combo({{a31, &k1}, {a32, &k2}}, h));
    const auto k4 = f(combo({{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const auto k5 = f(combo({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const auto k6 = f(combo({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    auto y5 = combo({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    const auto k7 = f(y5);
    pending_nfe += 6;

    double ss = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      ss += (e / sc) * (e / sc);
      finite = finite && std::isfinite(y5[i]) && std::isfinite(e);
    }
    const double err = d ? std::sqrt(ss / static_cast<double>(d)) : 0.0;
    if (!finite) {
      res.diverged = true;
      res.note = "rk45 produced a non-finite state";
      break;
    }
    const double factor =
        err == 0.0 ? cfg.max_factor
                   : std::clamp(cfg.safety * std::pow(err, -0.2), cfg.min_factor, cfg.max_factor);
    if (err <= 1.0) {
      const double t_next = last ? horizon : t + h;
      y = std::move(y5);
      k1 = k7;
      if (!detail::record_step(res, t_next, y, t_next - t, pending_nfe, cfg.divergence_bound)) break;
      pending_nfe = 0;
      t = t_next;
      h *= factor;
    } else {
      h *= std::min(1.0, factor);
    }
  }
  return res;
}

}  // namespace cvf
