#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "cvf/datagen/linear_ode.hpp"
#include "cvf/error.hpp"
#include "cvf/field.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rupture.hpp"

namespace cvf {

struct ProfileRow {
  double dt = 0.0;
  double nre = 0.0;        // mean over sampled states
  double term1_rms = 0.0;  // RMS over states and components
  double term2_rms = 0.0;
};

/// n points from lo to hi, evenly spaced in log(dt).
inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ParameterError("log grid needs 0 < lo <= hi");
  if (n == 0) throw ParameterError("log grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Symmetric-split rupture decomposition over a dt sweep for a set of
/// normalized states.
template <SecantField F>
std::vector<ProfileRow> rupture_profile(const F& field, const NormStats& stats, const std::vector<State>& states_norm,
                                        const std::vector<double>& dts, double eta = kDefaultEta) {
  if (states_norm.empty()) throw InputError("rupture profile needs at least one state");
  std::vector<ProfileRow> rows;
  for (double dt : dts) {
    ProfileRow row;
    row.dt = dt;
    double t1 = 0.0, t2 = 0.0;
    std::size_t comps = 0;
    for (const auto& s : states_norm) {
      const auto d = rupture_decompose(field, stats, s, dt, 0.5, eta);
      row.nre += d.report.nre;
      for (double v : d.term1) t1 += v * v;
      for (double v : d.term2) t2 += v * v;
      comps += d.term1.size();
    }
    row.nre /= static_cast<double>(states_norm.size());
    row.term1_rms = std::sqrt(t1 / static_cast<double>(comps));
    row.term2_rms = std::sqrt(t2 / static_cast<double>(comps));
    rows.push_back(row);
  }
  return rows;
}

/// Reference secant fields built from a known linear system, for checking
/// the diagnostics:
///   exact:           the analytic secant of exp(A dt)
///   frozen:          A s for every dt (dt-insensitive tangent)
///   dt_proportional: (1 + kappa dt) A s, a time embedding that is
///                    inconsistent across dt at the same state
enum class OracleVariant { exact, frozen, dt_proportional };

inline OracleVariant parse_oracle_variant(const std::string& s) {
  if (s == "exact") return OracleVariant::exact;
  if (s == "frozen") return OracleVariant::frozen;
  if (s == "dt-proportional" || s == "dt_proportional") return OracleVariant::dt_proportional;
  throw ValidationError("unknown oracle variant '" + s + "' (expected exact|frozen|dt-proportional)");
}

inline FunctionField oracle_variant_field(const LinearSystem& sys, OracleVariant v, double kappa = 4.0) {
  sys.validate();
  return FunctionField(sys.dim, [sys, v, kappa](std::span<const double> s, double dt) {
    if (v == OracleVariant::exact) return analytic_secant_field(sys, s, dt);
    auto out = sys.apply(s);
    if (v == OracleVariant::dt_proportional)
      for (double& x : out) x *= 1.0 + kappa * dt;
    return out;
  });
}

inline void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows) {
  os << "dt,nre,term1_rms,term2_rms\n";
  os.precision(17);
  for (const auto& r : rows) os << r.dt << ',' << r.nre << ',' << r.term1_rms << ',' << r.term2_rms << '\n';
}

}  // namespace cvf
