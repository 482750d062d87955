#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/field.hpp"

namespace cvf {

struct MetricsRecord {
  std::string protocol;
  std::optional<std::uint64_t> seed;
  double step_rmse = 0.0;
  double rollout_rmse = 0.0;
  double nfe_avg = 0.0;
  std::optional<double> cped;
  bool cped_undefined = false;  // baseline given but the model does not improve on it
  std::size_t segments = 0;
  std::size_t diverged = 0;  // trajectories whose rollout was truncated
  std::size_t max_search_iters = 0;
};

/// sqrt(mean over samples and components of the squared error).
inline double step_rmse(const std::vector<State>& pred, const std::vector<State>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("prediction and truth sample counts differ");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].size() != truth[k].size()) throw ShapeError("prediction and truth widths differ");
    for (std::size_t i = 0; i < pred[k].size(); ++i) {
      const double e = pred[k][i] - truth[k][i];
      ss += e * e;
    }
    n += pred[k].size();
  }
  if (n == 0) throw InputError("step RMSE of an empty sample");
  return std::sqrt(ss / static_cast<double>(n));
}

/// sqrt(mean of squared per-step RMSE values).
inline double rollout_rmse(std::span<const double> step_rmses) {
  if (step_rmses.empty()) throw InputError("rollout RMSE of an empty rollout");
  double ss = 0.0;
  for (double v : step_rmses) ss += v * v;
  return std::sqrt(ss / static_cast<double>(step_rmses.size()));
}

/// Rollout RMSE of a predicted trajectory against the truth, step by step.
inline double rollout_rmse(const std::vector<State>& pred_traj, const std::vector<State>& true_traj) {
  if (pred_traj.size() != true_traj.size()) throw ShapeError("trajectory lengths differ");
  std::vector<double> per;
  for (std::size_t k = 0; k < pred_traj.size(); ++k) per.push_back(step_rmse({pred_traj[k]}, {true_traj[k]}));
  return rollout_rmse(per);
}

/// Cost per RMSE drop: (NFE_model / NFE_base) / (L_base - L_model).
/// Empty when the model does not improve on the baseline.
inline std::optional<double> cped(double nfe_model, double l_model, double nfe_base, double l_base) {
  if (!(nfe_base > 0.0)) throw InputError("baseline NFE must be positive");
  const double drop = l_base - l_model;
  if (!(drop > 0.0)) return std::nullopt;
  return (nfe_model / nfe_base) / drop;
}

inline void attach_cped(MetricsRecord& model, const MetricsRecord& base) {
  model.cped = cped(model.nfe_avg, model.rollout_rmse, base.nfe_avg, base.rollout_rmse);
  model.cped_undefined = !model.cped.has_value();
}

struct MetricsSummary {
  MetricsRecord mean;
  MetricsRecord stddev;  // population
};

/// Mean and population standard deviation of every numeric column.
inline MetricsSummary summarize(const std::vector<MetricsRecord>& rows) {
  if (rows.empty()) throw InputError("no metrics rows to summarize");
  MetricsSummary s;
  s.mean.protocol = s.stddev.protocol = rows.front().protocol;
  const double n = static_cast<double>(rows.size());
  auto reduce = [&](auto get, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& r : rows) mean += get(r);
    mean /= n;
    double v = 0.0;
    for (const auto& r : rows) v += (get(r) - mean) * (get(r) - mean);
    sd = std::sqrt(v / n);
  };
  reduce([](const MetricsRecord& r) { return r.step_rmse; }, s.mean.step_rmse, s.stddev.step_rmse);
  reduce([](const MetricsRecord& r) { return r.rollout_rmse; }, s.mean.rollout_rmse, s.stddev.rollout_rmse);
  reduce([](const MetricsRecord& r) { return r.nfe_avg; }, s.mean.nfe_avg, s.stddev.nfe_avg);
  bool all_cped = true;
  for (const auto& r : rows) all_cped = all_cped && r.cped.has_value();
  if (all_cped) {
    double m = 0.0, sd = 0.0;
    reduce([](const MetricsRecord& r) { return *r.cped; }, m, sd);
    s.mean.cped = m;
    s.stddev.cped = sd;
  } else {
    for (const auto& r : rows) s.mean.cped_undefined = s.mean.cped_undefined || r.cped_undefined;
    s.stddev.cped_undefined = s.mean.cped_undefined;
  }
  return s;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace detail {

inline void write_metrics_row(std::ostream& os, const MetricsRecord& r, const std::string& seed_col) {
  os << r.protocol << ',' << seed_col << ',' << r.step_rmse << ',' << r.rollout_rmse << ',' << r.nfe_avg << ',';
  if (r.cped) os << *r.cped;
  else if (r.cped_undefined) os << "undefined";
  os << '\n';
}

}  // namespace detail

/// CSV with columns protocol, seed, step_rmse, rollout_rmse, nfe_avg, cped;
/// with `aggregate`, "mean" and "std" rows follow the per-seed rows.
inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& rows, bool aggregate) {
  os << "protocol,seed,step_rmse,rollout_rmse,nfe_avg,cped\n";
  os << std::setprecision(17);
  for (const auto& r : rows) detail::write_metrics_row(os, r, r.seed ? std::to_string(*r.seed) : "");
  if (aggregate && !rows.empty()) {
    const auto s = summarize(rows);
    detail::write_metrics_row(os, s.mean, "mean");
    detail::write_metrics_row(os, s.stddev, "std");
  }
}

}  // namespace cvf
