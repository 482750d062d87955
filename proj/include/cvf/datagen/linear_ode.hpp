#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"
#include "cvf/rng.hpp"

namespace cvf {

/// ds/dt = A s with A a dense d x d matrix (row-major), d in {1, 2}.
struct LinearSystem {
  std::size_t dim = 0;
  std::vector<double> a;

  void validate() const {
    if (dim < 1 || dim > 2) throw ParameterError("closed-form linear flows support d = 1 or 2");
    if (a.size() != dim * dim) throw ShapeError("system matrix must have d*d entries");
    for (double v : a)
      if (!std::isfinite(v)) throw ParameterError("system matrix is not finite");
  }

  std::vector<double> apply(std::span<const double> s) const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) out[i] += a[i * dim + j] * s[j];
    return out;
  }
};

inline LinearSystem scalar_decay(double lambda) { return {1, {lambda}}; }
inline LinearSystem rotation(double omega) { return {2, {0.0, omega, -omega, 0.0}}; }
inline LinearSystem damped_rotation(double gamma, double omega) { return {2, {-gamma, omega, -omega, -gamma}}; }
/// x'' + zeta x' + x = 0 as a first-order system.
inline LinearSystem damped_oscillator(double zeta = 0.2) { return {2, {0.0, 1.0, -1.0, -zeta}}; }

/// e^{A t} in closed form (row-major).
///
/// For d = 2 write A = m I + N with m = tr(A)/2. N is traceless, so
/// N^2 = q I with q = m^2 - det(A), which gives cosh/cos/linear families.
inline std::vector<double> expm_closed_form(const LinearSystem& sys, double t) {
  sys.validate();
  if (sys.dim == 1) return {std::exp(sys.a[0] * t)};
  const double a = sys.a[0], b = sys.a[1], c = sys.a[2], d = sys.a[3];
  const double m = 0.5 * (a + d);
  const double q = m * m - (a * d - b * c);
  double ch, sh;  // coefficient on I and on N
  if (q > 0.0) {
    const double r = std::sqrt(q);
    ch = std::cosh(r * t);
    sh = std::sinh(r * t) / r;
  } else if (q < 0.0) {
    const double r = std::sqrt(-q);
    ch = std::cos(r * t);
    sh = std::sin(r * t) / r;
  } else {
    ch = 1.0;
    sh = t;
  }
  const double e = std::exp(m * t);
  return {e * (ch + sh * (a - m)), e * sh * b, e * sh * c, e * (ch + sh * (d - m))};
}

/// Exact flow s(t) = e^{A t} s0.
inline std::vector<double> linear_flow(const LinearSystem& sys, std::span<const double> s0, double t) {
  if (s0.size() != sys.dim) throw ShapeError("initial state width does not match system");
  const auto e = expm_closed_form(sys, t);
  std::vector<double> out(sys.dim, 0.0);
  for (std::size_t i = 0; i < sys.dim; ++i)
    for (std::size_t j = 0; j < sys.dim; ++j) out[i] += e[i * sys.dim + j] * s0[j];
  return out;
}

/// ((e^{A dt} - I) s) / dt, with the tangent A s at dt = 0.
inline std::vector<double> analytic_secant_field(const LinearSystem& sys, std::span<const double> s, double dt) {
  if (s.size() != sys.dim) throw ShapeError("state width does not match system");
  if (dt == 0.0) return sys.apply(s);
  auto out = linear_flow(sys, s, dt);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - s[i]) / dt;
  return out;
}

/// The exact secant of a linear system as a field object (physical coordinates).
class LinearSecantField {
 public:
  explicit LinearSecantField(LinearSystem sys) : sys_(std::move(sys)) { sys_.validate(); }
  std::size_t dimension() const { return sys_.dim; }
  std::vector<double> operator()(std::span<const double> s, double dt) const {
    return analytic_secant_field(sys_, s, dt);
  }
  const LinearSystem& system() const { return sys_; }

 private:
  LinearSystem sys_;
};

/// Sampled exact trajectories of ds/dt = A s on the grid t_k = k dt.
inline TrajectoryDataset generate_linear_ode(const LinearSystem& sys, const std::vector<std::vector<double>>& s0_set,
                                             double dt, std::size_t n_steps) {
  sys.validate();
  if (s0_set.empty()) throw ValidationError("linear ODE dataset needs at least one initial state");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("linear ODE dt must be positive");
  if (n_steps < 2) throw ValidationError("linear ODE dataset needs at least 2 steps");
  TrajectoryDataset d;
  d.n_traj = s0_set.size();
  d.n_steps = n_steps;
  d.channels = sys.dim;
  d.base_dt = dt;
  for (std::size_t i = 0; i < sys.dim; ++i) d.labels.push_back("s" + std::to_string(i));
  for (std::size_t k = 0; k < n_steps; ++k) d.times.push_back(static_cast<double>(k) * dt);
  std::ostringstream meta;
  meta.precision(17);
  meta << "generator=linear_ode\ndim=" << sys.dim << "\nA=";
  for (std::size_t i = 0; i < sys.a.size(); ++i) meta << (i ? "," : "") << sys.a[i];
  meta << "\ndt=" << dt << "\n";
  d.metadata = meta.str();
  d.allocate();
  for (std::size_t t = 0; t < d.n_traj; ++t) {
    if (s0_set[t].size() != sys.dim) throw ShapeError("initial state width does not match system");
    for (std::size_t k = 0; k < n_steps; ++k) {
      const auto s = linear_flow(sys, s0_set[t], d.times[k]);
      std::copy(s.begin(), s.end(), d.state(t, k).begin());
    }
  }
  return d;
}

/// Initial states drawn uniformly from the box [-radius, radius]^d.
inline std::vector<std::vector<double>> random_initial_states(std::size_t count, std::size_t dim, double radius,
                                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (auto& s : out)
    for (double& v : s) v = rng.uniform(-radius, radius);
  return out;
}

}  // namespace cvf
