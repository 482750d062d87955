#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/field.hpp"

namespace cvf {

/// Accepted steps of one integration, in physical units.
/// times/states hold the initial point plus one entry per accepted step;
/// dts and nfe hold one entry per step.
struct RolloutResult {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> dts;
  std::vector<std::size_t> nfe;
  std::size_t total_nfe = 0;
  std::size_t max_search_iters = 0;  // GCS only
  bool diverged = false;
  std::string note;

  std::size_t steps() const noexcept { return dts.size(); }
  const State& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

inline constexpr double kDefaultDivergenceBound = 1e6;

namespace detail {

inline bool state_diverged(std::span<const double> s, double bound) {
  for (double v : s)
    if (!std::isfinite(v) || std::abs(v) > bound) return true;
  return false;
}

inline RolloutResult start_rollout(std::span<const double> s0) {
  RolloutResult r;
  r.times.push_back(0.0);
  r.states.emplace_back(s0.begin(), s0.end());
  return r;
}

/// Relative slack under which the remaining time is treated as consumed.
inline constexpr double kHorizonSlack = 1e-12;

inline void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("rollout horizon must be positive and finite");
}

/// Append an accepted step. Returns false (and flags the result) when the new
/// state leaves the divergence bound.
inline bool record_step(RolloutResult& r, double t_next, State s, double dt, std::size_t nfe, double bound) {
  r.times.push_back(t_next);
  r.dts.push_back(dt);
  r.nfe.push_back(nfe);
  r.total_nfe += nfe;
  const bool bad = state_diverged(s, bound);
  r.states.push_back(std::move(s));
  if (bad) {
    r.diverged = true;
    r.note = "state left the divergence bound at t=" + std::to_string(t_next);
  }
  return !bad;
}

}  // namespace detail

/// CSV trace: t, dt, nfe, then per-channel RMS of the state. The initial row
/// has dt = nfe = 0.
inline void write_trace_csv(std::ostream& os, const RolloutResult& r, std::size_t channels) {
  if (channels == 0) throw ParameterError("trace needs at least one channel");
  os << "t,dt,nfe";
  for (std::size_t c = 0; c < channels; ++c) os << ",rms_c" << c;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    const auto& s = r.states[k];
    if (s.size() % channels != 0) throw ShapeError("state width is not a multiple of the channel count");
    const std::size_t per = s.size() / channels;
    os << r.times[k] << ',' << (k ? r.dts[k - 1] : 0.0) << ',' << (k ? r.nfe[k - 1] : 0);
    for (std::size_t c = 0; c < channels; ++c) {
      double ss = 0.0;
      for (std::size_t i = 0; i < per; ++i) ss += s[c * per + i] * s[c * per + i];
      os << ',' << std::sqrt(ss / static_cast<double>(per));
    }
    os << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const RolloutResult& r, std::size_t channels) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  write_trace_csv(f, r, channels);
  if (!f) throw IoError("failed writing " + path);
}

/// Pack one rollout as a single-trajectory dataset (non-uniform times allowed).
inline TrajectoryDataset rollout_to_dataset(const RolloutResult& r, std::size_t channels,
                                            std::vector<std::size_t> spatial) {
  TrajectoryDataset d;
  d.n_traj = 1;
  d.n_steps = r.states.size();
  d.channels = channels;
  d.spatial = std::move(spatial);
  d.times = r.times;
  d.base_dt = r.dts.empty() ? 0.0 : r.dts.front();
  d.allocate();
  if (r.states.front().size() != d.state_dim()) throw ShapeError("rollout state width does not match the layout");
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    auto dst = d.state(0, k);
    std::copy(r.states[k].begin(), r.states[k].end(), dst.begin());
  }
  return d;
}

}  // namespace cvf
