#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/rng.hpp"
#include "cvf/train/config.hpp"

namespace cvf {

struct TrainingPair {
  std::size_t traj = 0;
  std::size_t i = 0, j = 0;  // frame indices, i < j
  std::vector<double> s_t;   // physical units
  std::vector<double> s_next;
  double dt = 0.0;
};

/// Indices 0, k, 2k, ... below times.size().
inline std::vector<std::size_t> downsample_uniform(std::span<const double> times, std::size_t k) {
  if (k == 0) throw ParameterError("uniform downsampling factor must be positive");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < times.size(); i += k) idx.push_back(i);
  return idx;
}

/// Sorted uniform sample of ceil(N/k) indices without replacement, always
/// containing 0. When fewer than two indices would be kept, returns [0, N-1]
/// so that at least one pair exists.
inline std::vector<std::size_t> downsample_random(std::span<const double> times, std::size_t k, Rng& rng) {
  if (k == 0) throw ParameterError("random downsampling factor must be positive");
  const std::size_t n = times.size();
  if (n == 0) return {};
  if (n == 1) return {0};
  const std::size_t m = (n + k - 1) / k;
  if (m < 2) return {0, n - 1};
  std::vector<std::size_t> pool(n - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::size_t> idx{0};
  idx.insert(idx.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m - 1));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Frame indices used for one trajectory under the configured downsampling.
inline std::vector<std::size_t> sampling_grid(std::span<const double> times, int downsample, Rng& rng) {
  if (downsample < 0) return downsample_uniform(times, static_cast<std::size_t>(-downsample));
  if (downsample > 0) return downsample_random(times, static_cast<std::size_t>(downsample), rng);
  return downsample_uniform(times, 1);
}

inline TrainingPair make_pair(const TrajectoryDataset& d, std::size_t traj, std::size_t i, std::size_t j) {
  TrainingPair p;
  p.traj = traj;
  p.i = i;
  p.j = j;
  p.s_t = d.state_copy(traj, i);
  p.s_next = d.state_copy(traj, j);
  p.dt = d.times[j] - d.times[i];
  return p;
}

/// All consecutive pairs of the (down)sampled grid of every trajectory.
/// Random grids are drawn per trajectory from `rng`.
inline std::vector<TrainingPair> build_pair_pool(const TrajectoryDataset& d, int downsample, Rng& rng) {
  if (d.n_traj == 0 || d.n_steps < 2) throw ValidationError("dataset has no consecutive frame pairs");
  std::vector<TrainingPair> pool;
  for (std::size_t t = 0; t < d.n_traj; ++t) {
    const auto idx = sampling_grid(d.times, downsample, rng);
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) pool.push_back(make_pair(d, t, idx[k], idx[k + 1]));
  }
  if (pool.empty()) throw ValidationError("downsampling left no training pairs");
  return pool;
}

/// Fisher-Yates shuffle driven by Rng::below.
template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
}

/// A batch of `batch_size` pairs drawn uniformly (with replacement) from the
/// configured sampling grid.
inline std::vector<TrainingPair> sample_pairs(const TrajectoryDataset& d, const TrainConfig& cfg, Rng& rng) {
  auto pool = build_pair_pool(d, cfg.downsample, rng);
  std::vector<TrainingPair> batch;
  batch.reserve(cfg.batch_size);
  for (std::size_t b = 0; b < cfg.batch_size; ++b) batch.push_back(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
  return batch;
}

inline double min_pair_dt(const std::vector<TrainingPair>& pairs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) m = std::min(m, p.dt);
  return m;
}

}  // namespace cvf
