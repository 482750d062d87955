#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cvf/normalize.hpp"

namespace cvf {

using State = std::vector<double>;

/// A secant velocity field psi(s, dt) evaluated in whatever coordinates the
/// caller works in (normalized coordinates for everything in rupture/solver).
template <class F>
concept SecantField = requires(const F& f, std::span<const double> s, double dt) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f(s, dt) } -> std::convertible_to<std::vector<double>>;
};

/// Fields that can evaluate many (state, dt) queries in one call.
template <class F>
concept BatchSecantField =
    SecantField<F> && requires(const F& f, const std::vector<State>& states, std::span<const double> dts) {
      { f.evaluate_many(states, dts) } -> std::convertible_to<std::vector<State>>;
    };

/// Evaluate a field on a list of queries, using the batch path when present.
template <SecantField F>
std::vector<State> evaluate_many(const F& field, const std::vector<State>& states, std::span<const double> dts) {
  if constexpr (BatchSecantField<F>) {
    return field.evaluate_many(states, dts);
  } else {
    std::vector<State> out;
    out.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) out.push_back(field(states[i], dts[i]));
    return out;
  }
}

/// Wraps a field and counts every evaluation made through it.
template <SecantField F>
class CountingField {
 public:
  explicit CountingField(const F& inner) : inner_(&inner) {}

  std::size_t dimension() const { return inner_->dimension(); }

  std::vector<double> operator()(std::span<const double> s, double dt) const {
    ++count_;
    return (*inner_)(s, dt);
  }

  std::vector<State> evaluate_many(const std::vector<State>& states, std::span<const double> dts) const {
    count_ += states.size();
    return cvf::evaluate_many(*inner_, states, dts);
  }

  std::size_t count() const noexcept { return count_; }
  void reset() noexcept { count_ = 0; }

 private:
  const F* inner_;
  mutable std::size_t count_ = 0;
};

/// psi(s, dt) = c for every state and step.
class ConstantField {
 public:
  explicit ConstantField(std::vector<double> value) : value_(std::move(value)) {}
  std::size_t dimension() const { return value_.size(); }
  std::vector<double> operator()(std::span<const double>, double) const { return value_; }

 private:
  std::vector<double> value_;
};

/// Field backed by an arbitrary callable; convenient for constructed models.
class FunctionField {
 public:
  using Fn = std::function<std::vector<double>(std::span<const double>, double)>;
  FunctionField(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dimension() const { return dim_; }
  std::vector<double> operator()(std::span<const double> s, double dt) const { return fn_(s, dt); }

 private:
  std::size_t dim_;
  Fn fn_;
};

/// Presents a field defined in physical coordinates as a field acting on
/// normalized states and returning normalized velocities.
template <SecantField F>
class NormalizedView {
 public:
  NormalizedView(const F& physical, const NormStats& stats) : physical_(&physical), stats_(&stats) {}

  std::size_t dimension() const { return physical_->dimension(); }

  std::vector<double> operator()(std::span<const double> s_norm, double dt) const {
    const auto s = denormalize_state(*stats_, s_norm);
    const auto v = (*physical_)(s, dt);
    return normalize_secant_velocity(*stats_, v);
  }

 private:
  const F* physical_;
  const NormStats* stats_;
};

/// Tangent surrogate v(s) = psi(s, probe_dt) in physical coordinates, used by
/// the classical fixed-step and embedded Runge-Kutta integrators.
template <SecantField F>
class TangentAdapter {
 public:
  TangentAdapter(const F& field, const NormStats& stats, double probe_dt)
      : field_(&field), stats_(&stats), probe_dt_(probe_dt) {}

  std::size_t dimension() const { return field_->dimension(); }

  std::vector<double> operator()(std::span<const double> s) const {
    const auto s_norm = normalize_state(*stats_, s);
    return denormalize_velocity(*stats_, (*field_)(s_norm, probe_dt_));
  }

 private:
  const F* field_;
  const NormStats* stats_;
  double probe_dt_;
};

/// Tangent vector field ds/dt = f(s) for classical integrators.
template <class F>
concept TangentField = requires(const F& f, std::span<const double> s) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f(s) } -> std::convertible_to<std::vector<double>>;
};

}  // namespace cvf
