#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/model.hpp"
#include "cvf/nn/mlp.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rng.hpp"
#include "cvf/train/config.hpp"
#include "cvf/train/sampling.hpp"

namespace cvf {

struct LossResult {
  double loss = 0.0;
  double match = 0.0;    // mean squared secant mismatch
  double rupture = 0.0;  // mean squared triangle residual (unweighted)
  nn::MlpParams grads;
};

namespace detail {

struct NormalizedBatch {
  std::vector<State> s, s_next, target;
  std::vector<double> dt;
};

inline NormalizedBatch normalize_batch(const NormStats& stats, const std::vector<TrainingPair>& batch) {
  NormalizedBatch nb;
  for (const auto& p : batch) {
    if (!(p.dt > 0.0)) throw InputError("training pair dt must be positive");
    std::vector<double> v(p.s_t.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (p.s_next[i] - p.s_t[i]) / p.dt;
    nb.s.push_back(normalize_state(stats, p.s_t));
    nb.s_next.push_back(normalize_state(stats, p.s_next));
    nb.target.push_back(normalize_secant_velocity(stats, v));
    nb.dt.push_back(p.dt);
  }
  return nb;
}

inline void check_finite_loss(double loss, double match, double rupture) {
  if (!std::isfinite(loss))
    throw NumericalError("training loss is not finite (match=" + std::to_string(match) +
                         ", rupture=" + std::to_string(rupture) + ")");
}

}  // namespace detail

/// Secant matching plus weighted triangle rupture, with exact gradients.
///
///   loss = mean ||psi(s~, dt) - v~||^2 + w * mean ||R(s~, dt; r)||^2
///
/// Squared norms are component means, consistent with the RMS convention.
/// In semigroup mode the gradient flows through the intermediate state
/// s~_1 = s~ + r dt (sigma_v psi(s~, r dt) + mu_v). `r` holds one split per
/// sample. Reported match/rupture are unweighted.
inline LossResult cvf_loss(const FieldModel& model, const NormStats& stats, const std::vector<TrainingPair>& batch,
                           std::span<const double> r, RuptureMode mode, double rupture_weight) {
  if (batch.empty()) throw InputError("loss needs a nonempty batch");
  if (r.size() != batch.size()) throw ShapeError("one split ratio per sample is required");
  const auto nb = detail::normalize_batch(stats, batch);
  const std::size_t B = batch.size();
  const std::size_t d = model.state_dim;
  const double scale = 1.0 / static_cast<double>(B * d);
  const bool with_rupture = mode != RuptureMode::off && rupture_weight != 0.0;

  LossResult out;
  out.grads = model.mlp.zeros_like();

  if (!with_rupture) {
    nn::MlpTape tape;
    const auto y = nn::mlp_forward(model.mlp, model.assemble_inputs(nb.s, nb.dt), &tape);
    nn::DenseTensor up(y.shape());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = y[b * d + i] - nb.target[b][i];
        out.match += diff * diff;
        up[b * d + i] = 2.0 * scale * diff;
      }
    out.match *= scale;
    out.loss = out.match;
    detail::check_finite_loss(out.loss, out.match, 0.0);
    nn::mlp_backward(model.mlp, tape, up, out.grads);
    return out;
  }

  for (double ri : r)
    if (!(ri > 0.0 && ri < 1.0)) throw ParameterError("rupture split ratio must lie in (0, 1)");

  // First pass rows: [a_b = psi(s_b, r_b dt_b)] then [c_b = psi(s_b, dt_b)],
  // plus [back_b = psi(s_next_b, -(1-r_b) dt_b)] in bidirectional mode.
  std::vector<State> rows;
  std::vector<double> dts;
  for (std::size_t b = 0; b < B; ++b) {
    rows.push_back(nb.s[b]);
    dts.push_back(r[b] * nb.dt[b]);
  }
  for (std::size_t b = 0; b < B; ++b) {
    rows.push_back(nb.s[b]);
    dts.push_back(nb.dt[b]);
  }
  if (mode == RuptureMode::bidirectional)
    for (std::size_t b = 0; b < B; ++b) {
      rows.push_back(nb.s_next[b]);
      dts.push_back(-(1.0 - r[b]) * nb.dt[b]);
    }
  nn::MlpTape tape1;
  const auto y1 = nn::mlp_forward(model.mlp, model.assemble_inputs(rows, dts), &tape1);
  auto a_row = [&](std::size_t b) { return y1.row(b); };
  auto c_row = [&](std::size_t b) { return y1.row(B + b); };

  nn::MlpTape tape2;
  nn::DenseTensor y2;
  if (mode == RuptureMode::semigroup) {
    std::vector<State> mids;
    std::vector<double> dts2;
    for (std::size_t b = 0; b < B; ++b) {
      mids.push_back(advance_normalized(stats, nb.s[b], r[b] * nb.dt[b], a_row(b)));
      dts2.push_back((1.0 - r[b]) * nb.dt[b]);
    }
    y2 = nn::mlp_forward(model.mlp, model.assemble_inputs(mids, dts2), &tape2);
  }
  auto b_row = [&](std::size_t b) {
    return mode == RuptureMode::semigroup ? std::span<const double>(y2.row(b)) : y1.row(2 * B + b);
  };

  nn::DenseTensor up1(y1.shape());
  nn::DenseTensor up2(y2.shape());
  std::vector<double> g_r(B * d);
  for (std::size_t b = 0; b < B; ++b) {
    const auto a = a_row(b), c = c_row(b), bb = b_row(b);
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = c[i] - nb.target[b][i];
      out.match += diff * diff;
      const double res = r[b] * (a[i] - c[i]) + (1.0 - r[b]) * (bb[i] - c[i]);
      out.rupture += res * res;
      const double g = 2.0 * rupture_weight * scale * res;
      g_r[b * d + i] = g;
      up1[b * d + i] = r[b] * g;
      up1[(B + b) * d + i] = 2.0 * scale * diff - g;
      if (mode == RuptureMode::semigroup) up2[b * d + i] = (1.0 - r[b]) * g;
      else up1[(2 * B + b) * d + i] = (1.0 - r[b]) * g;
    }
  }
  out.match *= scale;
  out.rupture *= scale;
  out.loss = out.match + rupture_weight * out.rupture;
  detail::check_finite_loss(out.loss, out.match, out.rupture);

  if (mode == RuptureMode::semigroup) {
    // d s~_1 / d a = r dt * gain (diagonal), so the state part of the second
    // pass's input gradient feeds back into the first query.
    const auto gin2 = nn::mlp_backward(model.mlp, tape2, up2, out.grads);
    const std::size_t w = model.input_width();
    for (std::size_t b = 0; b < B; ++b) {
      const double h = r[b] * nb.dt[b];
      for (std::size_t i = 0; i < d; ++i)
        up1[b * d + i] += h * stats.rate_gain(stats.channel_of(i)) * gin2[b * w + i];
    }
  }
  nn::mlp_backward(model.mlp, tape1, up1, out.grads);
  return out;
}

/// Loss value only, for any field in normalized coordinates (oracle fields,
/// constructed models). Matches cvf_loss(...).loss for a FieldModel.
template <SecantField F>
double cvf_loss_value(const F& field, const NormStats& stats, const std::vector<TrainingPair>& batch,
                      std::span<const double> r, RuptureMode mode, double rupture_weight) {
  if (batch.empty()) throw InputError("loss needs a nonempty batch");
  if (r.size() != batch.size()) throw ShapeError("one split ratio per sample is required");
  const auto nb = detail::normalize_batch(stats, batch);
  const std::size_t d = field.dimension();
  const double scale = 1.0 / static_cast<double>(batch.size() * d);
  const bool with_rupture = mode != RuptureMode::off && rupture_weight != 0.0;
  double match = 0.0, rupture = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto c = field(nb.s[b], nb.dt[b]);
    for (std::size_t i = 0; i < d; ++i) match += (c[i] - nb.target[b][i]) * (c[i] - nb.target[b][i]);
    if (!with_rupture) continue;
    const auto a = field(nb.s[b], r[b] * nb.dt[b]);
    const auto bb = mode == RuptureMode::semigroup
                        ? field(advance_normalized(stats, nb.s[b], r[b] * nb.dt[b], a), (1.0 - r[b]) * nb.dt[b])
                        : field(nb.s_next[b], -(1.0 - r[b]) * nb.dt[b]);
    for (std::size_t i = 0; i < d; ++i) {
      const double res = r[b] * (a[i] - c[i]) + (1.0 - r[b]) * (bb[i] - c[i]);
      rupture += res * res;
    }
  }
  const double loss = scale * match + (with_rupture ? rupture_weight * scale * rupture : 0.0);
  detail::check_finite_loss(loss, scale * match, scale * rupture);
  return loss;
}

/// Draw one split ratio per sample from U(0, 1).
inline std::vector<double> draw_split_ratios(std::size_t n, Rng& rng) {
  std::vector<double> r(n);
  for (double& v : r) v = rng.open01();
  return r;
}

/// Loss with fresh split ratios drawn from `rng`. Ratios are drawn even when
/// the rupture term is disabled so that the random stream does not depend on
/// the ablation mode.
inline LossResult cvf_loss(const FieldModel& model, const NormStats& stats, const std::vector<TrainingPair>& batch,
                           Rng& rng, const TrainConfig& cfg) {
  const auto r = draw_split_ratios(batch.size(), rng);
  return cvf_loss(model, stats, batch, r, cfg.rupture_mode, cfg.rupture_weight);
}

}  // namespace cvf
