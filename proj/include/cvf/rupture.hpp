#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/field.hpp"
#include "cvf/normalize.hpp"

namespace cvf {

inline constexpr double kDefaultEta = 1e-8;

/// Root-mean-square over components; every consistency norm uses this
/// reduction so tolerances do not depend on the grid size.
inline double rms_norm(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += v * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

/// ||R|| / (||psi|| + eta).
inline double normalized_rupture_error(double residual_norm, double direct_norm, double eta = kDefaultEta) {
  return residual_norm / (direct_norm + eta);
}

struct RuptureReport {
  std::vector<double> residual;
  std::vector<double> direct_velocity;  // psi~(s~, dt)
  double residual_norm = 0.0;
  double direct_norm = 0.0;
  double nre = 0.0;
  std::optional<double> term1_norm;
  std::optional<double> term2_norm;
  std::size_t nfe = 0;
};

namespace detail {

inline void check_rupture_args(double dt, double r) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("rupture needs a positive finite dt");
  if (!(r > 0.0 && r < 1.0)) throw ParameterError("rupture split ratio must lie in (0, 1), got " + std::to_string(r));
}

inline RuptureReport finish_report(std::vector<double> residual, std::vector<double> direct, std::size_t nfe,
                                   double eta) {
  RuptureReport rep;
  rep.residual_norm = rms_norm(residual);
  rep.direct_norm = rms_norm(direct);
  rep.nre = normalized_rupture_error(rep.residual_norm, rep.direct_norm, eta);
  rep.residual = std::move(residual);
  rep.direct_velocity = std::move(direct);
  rep.nfe = nfe;
  return rep;
}

}  // namespace detail

/// Forward semi-group triangle residual
///   r psi(s, r dt) + (1-r) psi(s1, (1-r) dt) - psi(s, dt),
/// with s1 advanced from s by r dt along the first query. Three evaluations.
/// Accumulated as weighted differences against the direct query so that a
/// constant field gives exactly zero.
template <SecantField F>
RuptureReport rupture3(const F& field, const NormStats& stats, std::span<const double> state_norm, double dt, double r,
                       double eta = kDefaultEta) {
  detail::check_rupture_args(dt, r);
  const double dt1 = r * dt;
  const double dt2 = (1.0 - r) * dt;
  const auto first = field(state_norm, dt1);
  const auto mid = advance_normalized(stats, state_norm, dt1, first);
  const auto second = field(mid, dt2);
  auto direct = field(state_norm, dt);
  std::vector<double> res(direct.size());
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = r * (first[i] - direct[i]) + (1.0 - r) * (second[i] - direct[i]);
  return detail::finish_report(std::move(res), std::move(direct), 3, eta);
}

/// Full-group residual using the observed endpoint and a backward query:
///   r psi(s_t, r dt) - [psi(s_t, dt) - (1-r) psi(s_{t+dt}, -(1-r) dt)].
/// Three evaluations, batchable as S = [s_t, s_t, s_next], T = [r dt, dt, -(1-r) dt].
template <SecantField F>
RuptureReport rupture3_bidirectional(const F& field, const NormStats& /*stats*/, std::span<const double> s_t_norm,
                                     std::span<const double> s_next_norm, double dt, double r,
                                     double eta = kDefaultEta) {
  detail::check_rupture_args(dt, r);
  if (s_t_norm.size() != s_next_norm.size()) throw ShapeError("bidirectional rupture endpoints differ in width");
  const auto first = field(s_t_norm, r * dt);
  auto direct = field(s_t_norm, dt);
  const auto back = field(s_next_norm, -(1.0 - r) * dt);
  std::vector<double> res(direct.size());
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = r * (first[i] - direct[i]) + (1.0 - r) * (back[i] - direct[i]);
  return detail::finish_report(std::move(res), std::move(direct), 3, eta);
}

/// Normalized Rupture Error at the symmetric split r = 0.5.
template <SecantField F>
double nre(const F& field, const NormStats& stats, std::span<const double> state_norm, double dt,
           double eta = kDefaultEta) {
  return rupture3(field, stats, state_norm, dt, 0.5, eta).nre;
}

/// k-segment composed residual
///   sum_i (dt_i / dt) psi(s^i, dt_i) - psi(s, dt),
/// with s^{i+1} advanced from s^i by dt_i. Uses partition.size() + 1 evaluations.
template <SecantField F>
RuptureReport rupture_k(const F& field, const NormStats& stats, std::span<const double> state_norm, double dt,
                        std::span<const double> partition, double eta = kDefaultEta) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("rupture needs a positive finite dt");
  if (partition.empty()) throw ParameterError("partition must have at least one segment");
  double total = 0.0;
  for (double p : partition) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("partition segments must be positive");
    total += p;
  }
  if (std::abs(total - dt) > 1e-12 * dt) throw ParameterError("partition does not sum to dt");

  std::vector<std::vector<double>> segments;
  segments.reserve(partition.size());
  std::vector<double> s(state_norm.begin(), state_norm.end());
  for (std::size_t k = 0; k < partition.size(); ++k) {
    segments.push_back(field(s, partition[k]));
    if (k + 1 < partition.size()) s = advance_normalized(stats, s, partition[k], segments.back());
  }
  auto direct = field(state_norm, dt);
  std::vector<double> res(direct.size(), 0.0);
  for (std::size_t k = 0; k < partition.size(); ++k)
    for (std::size_t i = 0; i < res.size(); ++i) res[i] += (partition[k] / dt) * (segments[k][i] - direct[i]);
  return detail::finish_report(std::move(res), std::move(direct), partition.size() + 1, eta);
}

struct RuptureTerms {
  std::vector<double> term1;  // temporal representation mismatch at the anchor state
  std::vector<double> term2;  // transport / convective part
  RuptureReport report;
};

/// Split of the triangle residual into the same-anchor mismatch
///   r psi(s, r dt) + (1-r) psi(s, (1-r) dt) - psi(s, dt)
/// and the remainder term2 = residual - term1. Four evaluations.
template <SecantField F>
RuptureTerms rupture_decompose(const F& field, const NormStats& stats, std::span<const double> state_norm, double dt,
                               double r, double eta = kDefaultEta) {
  RuptureTerms out;
  out.report = rupture3(field, stats, state_norm, dt, r, eta);
  const auto first = field(state_norm, r * dt);
  const auto anchored = field(state_norm, (1.0 - r) * dt);
  const auto& direct = out.report.direct_velocity;
  out.term1.resize(direct.size());
  out.term2.resize(direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    out.term1[i] = r * (first[i] - direct[i]) + (1.0 - r) * (anchored[i] - direct[i]);
    out.term2[i] = out.report.residual[i] - out.term1[i];
  }
  out.report.term1_norm = rms_norm(out.term1);
  out.report.term2_norm = rms_norm(out.term2);
  out.report.nfe += 2;
  return out;
}

}  // namespace cvf
