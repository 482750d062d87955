#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/eval/metrics.hpp"
#include "cvf/field.hpp"
#include "cvf/normalize.hpp"
#include "cvf/solver/classical.hpp"
#include "cvf/solver/gcs.hpp"

namespace cvf {

enum class SolverKind { gcs, euler, rk4, rk45 };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::gcs: return "gcs";
    case SolverKind::euler: return "euler";
    case SolverKind::rk4: return "rk4";
    case SolverKind::rk45: return "rk45";
  }
  return "gcs";
}

inline SolverKind parse_solver_kind(const std::string& s) {
  if (s == "gcs") return SolverKind::gcs;
  if (s == "euler") return SolverKind::euler;
  if (s == "rk4") return SolverKind::rk4;
  if (s == "rk45" || s == "dopri5") return SolverKind::rk45;
  throw ValidationError("unknown solver '" + s + "' (expected gcs|euler|rk4|rk45)");
}

struct EvalConfig {
  SolverKind solver = SolverKind::gcs;
  GcsConfig gcs;          // delta_min must be set, usually from the checkpoint
  double fixed_dt = 0.0;  // classical step; 0 uses delta_min
  double probe_dt = 0.0;  // tangent probe; 0 uses delta_min
  Rk45Config rk45;
  std::size_t threads = 1;

  double fixed_step() const { return fixed_dt > 0.0 ? fixed_dt : gcs.delta_min; }
  double probe() const { return probe_dt > 0.0 ? probe_dt : gcs.delta_min; }
};

struct SegmentResult {
  State state;
  std::size_t nfe = 0;
  std::size_t search_iters = 0;
  bool diverged = false;
};

/// Advance a physical state over `span` seconds with the configured solver.
/// The GCS requests the whole span and subdivides on its own.
template <SecantField F>
SegmentResult advance_segment(const F& field, const NormStats& stats, std::span<const double> s, double span,
                              const EvalConfig& cfg) {
  RolloutResult r;
  switch (cfg.solver) {
    case SolverKind::gcs: r = rollout_gcs(field, stats, s, span, span, cfg.gcs); break;
    case SolverKind::euler:
    case SolverKind::rk4: {
      TangentAdapter tangent(field, stats, cfg.probe());
      r = rollout_fixed(tangent, s, span, cfg.fixed_step(),
                        cfg.solver == SolverKind::euler ? FixedScheme::euler : FixedScheme::rk4,
                        cfg.gcs.divergence_bound);
      break;
    }
    case SolverKind::rk45: {
      TangentAdapter tangent(field, stats, cfg.probe());
      auto rc = cfg.rk45;
      rc.divergence_bound = cfg.gcs.divergence_bound;
      r = rollout_adaptive_rk45(tangent, s, span, rc);
      break;
    }
  }
  return {r.final_state(), r.total_nfe, r.max_search_iters, r.diverged};
}

/// Split [0, n_steps-1] into segments of `k` grid intervals plus a final
/// partial one. Returns segment boundary indices including 0 and n_steps-1.
inline std::vector<std::size_t> segment_bounds(std::size_t n_steps, std::size_t k) {
  if (k == 0) throw ParameterError("segment length must be positive");
  if (n_steps < 2) throw ValidationError("evaluation needs at least two frames per trajectory");
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < n_steps - 1; i += k) b.push_back(i);
  b.push_back(n_steps - 1);
  return b;
}

namespace detail {

/// Run fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous blocks so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / threads; i < (w + 1) * n / threads; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct TrajectoryEval {
  std::vector<double> endpoint_sq;  // squared error sum per segment endpoint (rollout)
  double step_sq = 0.0;             // teacher-forced first-segment errors
  std::size_t step_count = 0;
  std::size_t nfe = 0;
  std::size_t search_iters = 0;
  bool diverged = false;
};

template <SecantField F>
TrajectoryEval eval_trajectory(const F& field, const NormStats& stats, const TrajectoryDataset& d, std::size_t traj,
                               const std::vector<std::size_t>& bounds, const EvalConfig& cfg) {
  TrajectoryEval out;
  const std::size_t w = d.state_dim();
  State s = d.state_copy(traj, bounds.front());
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const double span = d.times[bounds[k + 1]] - d.times[bounds[k]];
    const auto truth = d.state(traj, bounds[k + 1]);

    // Teacher-forced: start this segment from the true state.
    const auto from_truth = advance_segment(field, stats, d.state(traj, bounds[k]), span, cfg);
    for (std::size_t i = 0; i < w; ++i) {
      const double e = from_truth.state[i] - truth[i];
      out.step_sq += e * e;
    }
    out.step_count += w;

    double sq = 0.0;
    if (!out.diverged) {
      const auto seg = advance_segment(field, stats, s, span, cfg);
      out.nfe += seg.nfe;
      out.search_iters = std::max(out.search_iters, seg.search_iters);
      s = seg.state;
      out.diverged = seg.diverged;
    }
    for (std::size_t i = 0; i < w; ++i) {
      const double e = s[i] - truth[i];
      sq += e * e;
    }
    out.endpoint_sq.push_back(out.diverged ? std::numeric_limits<double>::infinity() : sq);
  }
  return out;
}

}  // namespace detail

/// Autoregressive evaluation where every requested step spans `segment`
/// grid intervals (the last one possibly fewer). Errors are taken at the
/// segment endpoints in physical units:
///   step_rmse: each segment integrated from the true segment start;
///   rollout_rmse: the chained prediction, L = sqrt(mean_k L_k^2);
///   nfe_avg: field evaluations of the chained rollout per segment.
template <SecantField F>
MetricsRecord eval_segments(const F& field, const NormStats& stats, const TrajectoryDataset& d, std::size_t segment,
                            const EvalConfig& cfg, std::string protocol) {
  d.validate();
  cfg.gcs.validate();
  const auto bounds = segment_bounds(d.n_steps, segment);
  std::vector<detail::TrajectoryEval> per(d.n_traj);
  detail::parallel_for(d.n_traj, cfg.threads, [&](std::size_t t) {
    per[t] = detail::eval_trajectory(field, stats, d, t, bounds, cfg);
  });

  MetricsRecord m;
  m.protocol = std::move(protocol);
  const std::size_t n_seg = bounds.size() - 1;
  m.segments = n_seg * d.n_traj;
  double step_sq = 0.0, roll_sq = 0.0;
  std::size_t step_n = 0, nfe = 0;
  for (const auto& p : per) {
    step_sq += p.step_sq;
    step_n += p.step_count;
    nfe += p.nfe;
    m.max_search_iters = std::max(m.max_search_iters, p.search_iters);
    m.diverged += p.diverged ? 1 : 0;
    for (double v : p.endpoint_sq) roll_sq += v;
  }
  m.step_rmse = std::sqrt(step_sq / static_cast<double>(step_n));
  // Every endpoint carries the same number of components, so the mean of the
  // squared per-endpoint RMSEs is the overall mean squared error.
  m.rollout_rmse = std::sqrt(roll_sq / static_cast<double>(step_n));
  m.nfe_avg = static_cast<double>(nfe) / static_cast<double>(m.segments);
  return m;
}

/// Each requested step is one native grid interval.
template <SecantField F>
MetricsRecord eval_time_informed(const F& field, const NormStats& stats, const TrajectoryDataset& d,
                                 const EvalConfig& cfg) {
  return eval_segments(field, stats, d, 1, cfg, "informed");
}

/// Each requested step spans `horizon_steps` grid intervals; 0 means the
/// whole trajectory in one request.
template <SecantField F>
MetricsRecord eval_direct_autoregressive(const F& field, const NormStats& stats, const TrajectoryDataset& d,
                                         std::size_t horizon_steps, const EvalConfig& cfg) {
  const std::size_t k = horizon_steps == 0 ? std::max<std::size_t>(1, d.n_steps - 1) : horizon_steps;
  return eval_segments(field, stats, d, k, cfg, "direct");
}

/// A field that has collapsed onto a constant, dt-insensitive velocity:
/// predicted displacement grows proportionally with dt, and every triangle
/// residual vanishes. The constant is the mean normalized secant velocity of
/// the dataset's consecutive pairs.
inline ConstantField collapsed_field(const TrajectoryDataset& d, const NormStats& stats) {
  d.validate();
  std::vector<double> mean(d.state_dim(), 0.0);
  std::size_t n = 0;
  for (std::size_t t = 0; t < d.n_traj; ++t)
    for (std::size_t k = 0; k + 1 < d.n_steps; ++k) {
      const auto a = d.state(t, k), b = d.state(t, k + 1);
      const double dt = d.times[k + 1] - d.times[k];
      std::vector<double> v(a.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (b[i] - a[i]) / dt;
      const auto vn = normalize_secant_velocity(stats, v);
      for (std::size_t i = 0; i < v.size(); ++i) mean[i] += vn[i];
      ++n;
    }
  for (double& v : mean) v /= static_cast<double>(n);
  return ConstantField(std::move(mean));
}

}  // namespace cvf
