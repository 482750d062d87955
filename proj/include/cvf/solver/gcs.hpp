#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/field.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rupture.hpp"
#include "cvf/solver/rollout.hpp"

namespace cvf {

struct GcsConfig {
  double delta_min = 0.0;
  double eta = kDefaultEta;
  std::size_t max_search_iters = 64;
  double converge_eps = 1e-12;
  double divergence_bound = kDefaultDivergenceBound;

  void validate() const {
    if (!(delta_min > 0.0) || !std::isfinite(delta_min)) throw ParameterError("delta_min must be positive");
    if (!(eta > 0.0)) throw ParameterError("eta must be positive");
    if (max_search_iters == 0) throw ParameterError("max_search_iters must be positive");
    if (!(converge_eps >= 0.0)) throw ParameterError("converge_eps must be nonnegative");
  }
};

struct StepOutcome {
  std::vector<double> velocity;  // normalized, evaluated at accepted_dt
  double accepted_dt = 0.0;
  std::size_t nfe = 0;
  std::size_t search_iters = 0;
  std::vector<double> proposals;  // one per search round
};

/// Raised when the consistency estimate stops being finite.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, std::vector<double> state, double dt)
      : NumericalError(what), state_(std::move(state)), dt_(dt) {}
  const std::vector<double>& state() const noexcept { return state_; }
  double dt() const noexcept { return dt_; }

 private:
  std::vector<double> state_;
  double dt_;
};

/// tau_new = max(delta_min, sqrt(delta_min * tau / nre)), nre floored at eta.
inline double step_update(double delta_min, double t_curr, double nre_value, double eta = kDefaultEta) {
  return std::max(delta_min, std::sqrt(delta_min * t_curr / std::max(nre_value, eta)));
}

namespace detail {

/// Requests this close to delta_min take the single-evaluation path, so grid
/// intervals that differ from delta_min by rounding behave like delta_min.
inline bool at_resolution_floor(double requested, double delta_min) {
  return requested <= delta_min * (1.0 + 1e-9);
}

enum class SearchVerdict { accept_current, accept_floor, shrink };

/// One round of the step-size search given the NRE at `current`.
inline SearchVerdict judge(const GcsConfig& cfg, double current, double nre_value, std::size_t round,
                           double& proposal) {
  const double raw = std::sqrt(cfg.delta_min * current / std::max(nre_value, cfg.eta));
  proposal = std::max(cfg.delta_min, raw);
  if (proposal >= current) return SearchVerdict::accept_current;
  if (raw < cfg.delta_min) return SearchVerdict::accept_floor;
  if (std::abs(proposal - current) <= cfg.converge_eps * current || round >= cfg.max_search_iters)
    return SearchVerdict::accept_current;
  return SearchVerdict::shrink;
}

inline void check_nre(double value, std::span<const double> s, double dt) {
  if (!std::isfinite(value))
    throw SolverError("normalized rupture error is not finite at dt=" + std::to_string(dt),
                      std::vector<double>(s.begin(), s.end()), dt);
}

}  // namespace detail

/// One greedy consistency step from a normalized state.
///
/// The macro step is shrunk via step_update until the field's own symmetric
/// triangle residual certifies it, the proposal stalls, or the round cap is
/// reached. The returned velocity is the direct query already made by the
/// accepted round's rupture probe; only the delta_min floor costs one extra
/// evaluation.
template <SecantField F>
StepOutcome gcs_step(const F& field, const NormStats& stats, std::span<const double> state_norm, double requested_dt,
                     const GcsConfig& cfg) {
  if (!(requested_dt > 0.0) || !std::isfinite(requested_dt)) throw ParameterError("requested dt must be positive");
  StepOutcome out;
  if (detail::at_resolution_floor(requested_dt, cfg.delta_min)) {
    out.velocity = field(state_norm, requested_dt);
    out.accepted_dt = requested_dt;
    out.nfe = 1;
    return out;
  }
  double current = requested_dt;
  for (std::size_t round = 1;; ++round) {
    auto rep = rupture3(field, stats, state_norm, current, 0.5, cfg.eta);
    out.nfe += rep.nfe;
    out.search_iters = round;
    detail::check_nre(rep.nre, state_norm, current);
    double proposal = 0.0;
    const auto verdict = detail::judge(cfg, current, rep.nre, round, proposal);
    out.proposals.push_back(proposal);
    if (verdict == detail::SearchVerdict::accept_current) {
      out.velocity = std::move(rep.direct_velocity);
      out.accepted_dt = current;
      return out;
    }
    if (verdict == detail::SearchVerdict::accept_floor) {
      out.velocity = field(state_norm, cfg.delta_min);
      out.nfe += 1;
      out.accepted_dt = cfg.delta_min;
      return out;
    }
    current = proposal;
  }
}

/// Integrate from s0 (physical) to `horizon`, requesting min(remaining,
/// schedule_dt) at every macro step. schedule_dt <= 0 requests the whole
/// remaining horizon each time. Divergence truncates the rollout.
template <SecantField F>
RolloutResult rollout_gcs(const F& field, const NormStats& stats, std::span<const double> s0_phys, double horizon,
                          double schedule_dt, const GcsConfig& cfg) {
  cfg.validate();
  detail::check_horizon(horizon);
  auto res = detail::start_rollout(s0_phys);
  auto s_norm = normalize_state(stats, s0_phys);
  double t = 0.0;
  while (horizon - t > detail::kHorizonSlack * horizon) {
    const double remaining = horizon - t;
    const double request = schedule_dt > 0.0 ? std::min(remaining, schedule_dt) : remaining;
    StepOutcome step;
    try {
      step = gcs_step(field, stats, s_norm, request, cfg);
    } catch (const SolverError& e) {
      res.diverged = true;
      res.note = e.what();
      break;
    }
    s_norm = advance_normalized(stats, s_norm, step.accepted_dt, step.velocity);
    t = step.accepted_dt == remaining ? horizon : t + step.accepted_dt;
    res.max_search_iters = std::max(res.max_search_iters, step.search_iters);
    if (!detail::record_step(res, t, denormalize_state(stats, s_norm), step.accepted_dt, step.nfe,
                             cfg.divergence_bound))
      break;
  }
  if (!res.diverged) res.times.back() = horizon;
  return res;
}

/// Batch GCS. Every sample keeps its own clock and step size; within a macro
/// round only the samples still searching are sent to the field (mask
/// pruning), and each round's queries go out as one batched evaluation.
/// Produces the same steps as rollout_gcs applied per sample.
template <SecantField F>
std::vector<RolloutResult> rollout_gcs_batch(const F& field, const NormStats& stats, const std::vector<State>& s0_phys,
                                             double horizon, double schedule_dt, const GcsConfig& cfg) {
  cfg.validate();
  detail::check_horizon(horizon);
  const std::size_t n = s0_phys.size();
  std::vector<RolloutResult> res;
  std::vector<State> s(n);
  std::vector<double> t(n, 0.0);
  std::vector<bool> live(n, true);
  for (std::size_t b = 0; b < n; ++b) {
    res.push_back(detail::start_rollout(s0_phys[b]));
    s[b] = normalize_state(stats, s0_phys[b]);
  }
  auto finished = [&](std::size_t b) { return horizon - t[b] <= detail::kHorizonSlack * horizon; };
  for (std::size_t b = 0; b < n; ++b) live[b] = !finished(b);

  struct Search {
    std::size_t sample;
    double requested, current;
    StepOutcome out;
    bool done = false;
  };

  while (std::any_of(live.begin(), live.end(), [](bool v) { return v; })) {
    std::vector<Search> active;
    for (std::size_t b = 0; b < n; ++b) {
      if (!live[b]) continue;
      const double remaining = horizon - t[b];
      const double req = schedule_dt > 0.0 ? std::min(remaining, schedule_dt) : remaining;
      active.push_back({b, req, req, {}, false});
    }

    // Fast path for requests at the resolution floor.
    {
      std::vector<State> q;
      std::vector<double> dts;
      std::vector<std::size_t> who;
      for (std::size_t a = 0; a < active.size(); ++a)
        if (detail::at_resolution_floor(active[a].requested, cfg.delta_min)) {
          q.push_back(s[active[a].sample]);
          dts.push_back(active[a].requested);
          who.push_back(a);
        }
      if (!q.empty()) {
        auto v = evaluate_many(field, q, dts);
        for (std::size_t k = 0; k < who.size(); ++k) {
          auto& st = active[who[k]];
          st.out.velocity = std::move(v[k]);
          st.out.accepted_dt = st.requested;
          st.out.nfe = 1;
          st.done = true;
        }
      }
    }

    for (std::size_t round = 1;; ++round) {
      std::vector<std::size_t> mask;
      for (std::size_t a = 0; a < active.size(); ++a)
        if (!active[a].done) mask.push_back(a);
      if (mask.empty()) break;
      std::vector<State> q;
      std::vector<double> dts;
      for (std::size_t a : mask) {
        q.push_back(s[active[a].sample]);
        dts.push_back(0.5 * active[a].current);
        q.push_back(s[active[a].sample]);
        dts.push_back(active[a].current);
      }
      auto first_pass = evaluate_many(field, q, dts);
      std::vector<State> mids;
      std::vector<double> dts2;
      for (std::size_t m = 0; m < mask.size(); ++m) {
        const auto& st = active[mask[m]];
        mids.push_back(advance_normalized(stats, s[st.sample], 0.5 * st.current, first_pass[2 * m]));
        dts2.push_back(0.5 * st.current);
      }
      auto second_pass = evaluate_many(field, mids, dts2);

      std::vector<std::size_t> need_floor;
      for (std::size_t m = 0; m < mask.size(); ++m) {
        auto& st = active[mask[m]];
        const auto& first = first_pass[2 * m];
        auto& direct = first_pass[2 * m + 1];
        std::vector<double> r(direct.size());
        for (std::size_t i = 0; i < r.size(); ++i)
          r[i] = 0.5 * (first[i] - direct[i]) + 0.5 * (second_pass[m][i] - direct[i]);
        const double value = normalized_rupture_error(rms_norm(r), rms_norm(direct), cfg.eta);
        st.out.nfe += 3;
        st.out.search_iters = round;
        try {
          detail::check_nre(value, s[st.sample], st.current);
        } catch (const SolverError& e) {
          res[st.sample].diverged = true;
          res[st.sample].note = e.what();
          live[st.sample] = false;
          st.done = true;
          st.out.accepted_dt = 0.0;
          continue;
        }
        double proposal = 0.0;
        const auto verdict = detail::judge(cfg, st.current, value, round, proposal);
        st.out.proposals.push_back(proposal);
        if (verdict == detail::SearchVerdict::accept_current) {
          st.out.velocity = std::move(direct);
          st.out.accepted_dt = st.current;
          st.done = true;
        } else if (verdict == detail::SearchVerdict::accept_floor) {
          need_floor.push_back(mask[m]);
        } else {
          st.current = proposal;
        }
      }
      if (!need_floor.empty()) {
        std::vector<State> fq;
        std::vector<double> fdt;
        for (std::size_t a : need_floor) {
          fq.push_back(s[active[a].sample]);
          fdt.push_back(cfg.delta_min);
        }
        auto v = evaluate_many(field, fq, fdt);
        for (std::size_t k = 0; k < need_floor.size(); ++k) {
          auto& st = active[need_floor[k]];
          st.out.velocity = std::move(v[k]);
          st.out.nfe += 1;
          st.out.accepted_dt = cfg.delta_min;
          st.done = true;
        }
      }
    }

    for (auto& st : active) {
      const std::size_t b = st.sample;
      if (!live[b]) continue;
      const double remaining = horizon - t[b];
      s[b] = advance_normalized(stats, s[b], st.out.accepted_dt, st.out.velocity);
      t[b] = st.out.accepted_dt == remaining ? horizon : t[b] + st.out.accepted_dt;
      res[b].max_search_iters = std::max(res[b].max_search_iters, st.out.search_iters);
      if (!detail::record_step(res[b], t[b], denormalize_state(stats, s[b]), st.out.accepted_dt, st.out.nfe,
                               cfg.divergence_bound) ||
          finished(b))
        live[b] = false;
    }
  }
  for (auto& r : res)
    if (!r.diverged) r.times.back() = horizon;
  return res;
}

}  // namespace cvf
