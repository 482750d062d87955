#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "cvf/checkpoint.hpp"
#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/model.hpp"
#include "cvf/nn/adamw.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rng.hpp"
#include "cvf/train/config.hpp"
#include "cvf/train/loss.hpp"
#include "cvf/train/sampling.hpp"
#include "cvf/train/schedule.hpp"

namespace cvf {

struct EpochMetrics {
  std::uint64_t epoch = 0;  // epochs completed
  double loss = 0.0;        // mean over the epoch's batches
  double match = 0.0;
  double rupture = 0.0;
  std::optional<double> val_rmse;
  double lr = 0.0;  // rate used by the last step of the epoch
  double wallclock = 0.0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

struct FitOptions {
  const TrajectoryDataset* validation = nullptr;  // defaults to the training set
  MetricsSink sink;
  const Checkpoint* resume = nullptr;
  std::uint64_t stop_after_epoch = 0;  // nonzero: return early once this epoch completes
};

namespace detail {

inline double dataset_base_dt(const TrajectoryDataset& d) {
  if (d.base_dt > 0.0) return d.base_dt;
  if (d.times.size() >= 2) return d.times[1] - d.times[0];
  return 1.0;
}

/// Number of grid points kept per trajectory; constant across epochs.
inline std::size_t grid_points(std::size_t n, int downsample) {
  if (downsample < 0) {
    const auto k = static_cast<std::size_t>(-downsample);
    return (n + k - 1) / k;
  }
  if (downsample > 0) {
    const std::size_t m = (n + static_cast<std::size_t>(downsample) - 1) / static_cast<std::size_t>(downsample);
    return n < 2 ? n : std::max<std::size_t>(m, 2);
  }
  return n;
}

inline Rng epoch_rng(std::uint64_t seed, std::uint64_t epoch) { return Rng(seed).fork(epoch + 1); }

}  // namespace detail

inline FieldModelConfig model_config_for(const TrajectoryDataset& d, const TrainConfig& cfg) {
  FieldModelConfig m;
  m.state_dim = d.state_dim();
  m.hidden = cfg.hidden;
  m.activation = cfg.activation;
  m.dt_embedding.kind = cfg.dt_embedding;
  m.dt_embedding.n_freq = cfg.fourier_freqs;
  m.dt_embedding.ref_dt = cfg.normalize_dt ? detail::dataset_base_dt(d) : 1.0;
  m.final_scale = cfg.final_scale;
  return m;
}

/// Autoregressive one-model-call-per-interval rollout RMSE (physical units)
/// over the same grid the training pairs come from.
template <SecantField F>
double validation_rollout_rmse(const F& field, const NormStats& stats, const TrajectoryDataset& d, int downsample) {
  Rng unused(0);
  const auto idx = sampling_grid(d.times, downsample < 0 ? downsample : 0, unused);
  double ss = 0.0;
  std::size_t count = 0;
  try {
    for (std::size_t t = 0; t < d.n_traj; ++t) {
      auto s = d.state_copy(t, idx[0]);
      for (std::size_t k = 1; k < idx.size(); ++k) {
        s = predict_step(field, stats, s, d.times[idx[k]] - d.times[idx[k - 1]]);
        const auto truth = d.state(t, idx[k]);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const double e = s[i] - truth[i];
          ss += e * e;
        }
        count += s.size();
      }
    }
  } catch (const InputError&) {
    return std::numeric_limits<double>::infinity();
  }
  if (count == 0) return 0.0;
  const double rmse = std::sqrt(ss / static_cast<double>(count));
  return std::isfinite(rmse) ? rmse : std::numeric_limits<double>::infinity();
}

/// Freshly initialized checkpoint: seeded model, identity statistics, and
/// delta_min from the first epoch's pair grid.
inline Checkpoint init_checkpoint(const TrajectoryDataset& d, const TrainConfig& cfg) {
  d.validate();
  cfg.validate();
  Checkpoint c;
  Rng init = Rng(cfg.seed).fork(0);
  c.model = make_field_model(model_config_for(d, cfg), init);
  c.stats = NormStats::identity(d.channels, d.spatial_size(), cfg.norm_scheme, cfg.ema_decay);
  c.config_echo = echo(cfg);
  c.seed = cfg.seed;
  if (cfg.delta_min_policy == DeltaMinPolicy::fixed) {
    c.delta_min = cfg.delta_min_fixed;
  } else {
    Rng first = detail::epoch_rng(cfg.seed, 0);
    c.delta_min = min_pair_dt(build_pair_pool(d, cfg.downsample, first));
  }
  return c;
}

/// Train the secant field with AdamW on the configured loss.
///
/// Deterministic given the seed. Each epoch draws its pairs, shuffle and
/// split ratios from a stream derived from (seed, epoch), so resuming from a
/// checkpoint continues exactly where an uninterrupted run would be.
inline Checkpoint fit(const TrajectoryDataset& d, const TrainConfig& cfg, const FitOptions& opts = {}) {
  Checkpoint c = opts.resume ? *opts.resume : init_checkpoint(d, cfg);
  if (opts.resume) {
    d.validate();
    cfg.validate();
    if (c.model.state_dim != d.state_dim()) throw ValidationError("checkpoint does not match dataset state size");
    c.config_echo = echo(cfg);
  }
  const auto start = std::chrono::steady_clock::now();
  const TrajectoryDataset& val = opts.validation ? *opts.validation : d;
  const std::size_t pairs_per_epoch = d.n_traj * (detail::grid_points(d.n_steps, cfg.downsample) - 1);
  const std::size_t steps_per_epoch = (pairs_per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total_steps = cfg.epochs * steps_per_epoch;
  const nn::AdamWConfig adam;
  c.stats.ema_decay = cfg.ema_decay;

  for (std::uint64_t epoch = c.epoch; epoch < cfg.epochs; ++epoch) {
    Rng rng = detail::epoch_rng(cfg.seed, epoch);
    auto pool = build_pair_pool(d, cfg.downsample, rng);
    if (cfg.delta_min_policy == DeltaMinPolicy::min_pair) c.delta_min = std::min(c.delta_min, min_pair_dt(pool));
    shuffle_in_place(pool, rng);

    EpochMetrics m;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < pool.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(pool.size(), lo + cfg.batch_size);
      const std::vector<TrainingPair> batch(pool.begin() + static_cast<std::ptrdiff_t>(lo),
                                            pool.begin() + static_cast<std::ptrdiff_t>(hi));
      std::vector<std::vector<double>> states, vels;
      for (const auto& p : batch) {
        states.push_back(p.s_t);
        std::vector<double> v(p.s_t.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (p.s_next[i] - p.s_t[i]) / p.dt;
        vels.push_back(std::move(v));
      }
      c.stats = update_stats(std::move(c.stats), states, vels);
      const auto res = cvf_loss(c.model, c.stats, batch, rng, cfg);
      m.lr = lr_at(c.step, total_steps, cfg.base_lr);
      nn::adamw_step(c.model.mlp, res.grads, c.optimizer, m.lr, adam);
      for (const auto& l : c.model.mlp.layers)
        for (double w : l.weight)
          if (!std::isfinite(w)) throw NumericalError("parameters became non-finite at step " + std::to_string(c.step));
      ++c.step;
      ++batches;
      m.loss += res.loss;
      m.match += res.match;
      m.rupture += res.rupture;
    }
    c.epoch = epoch + 1;
    m.epoch = c.epoch;
    m.loss /= static_cast<double>(batches);
    m.match /= static_cast<double>(batches);
    m.rupture /= static_cast<double>(batches);
    if (cfg.val_every > 0 && (c.epoch % cfg.val_every == 0 || c.epoch == cfg.epochs))
      m.val_rmse = validation_rollout_rmse(c.model, c.stats, val, cfg.downsample);
    m.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (opts.sink) opts.sink(m);
    if (opts.stop_after_epoch != 0 && c.epoch >= opts.stop_after_epoch) break;
  }
  return c;
}

}  // namespace cvf
