#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/field.hpp"
#include "cvf/nn/mlp.hpp"
#include "cvf/normalize.hpp"
#include "cvf/rng.hpp"

namespace cvf {

enum class DtEmbeddingKind : std::uint8_t { raw_append = 0, fourier = 1 };

inline std::string to_string(DtEmbeddingKind k) {
  return k == DtEmbeddingKind::raw_append ? "raw" : "fourier";
}

inline DtEmbeddingKind parse_dt_embedding(const std::string& s) {
  if (s == "raw" || s == "raw-append") return DtEmbeddingKind::raw_append;
  if (s == "fourier") return DtEmbeddingKind::fourier;
  throw ParameterError("unknown dt embedding '" + s + "'");
}

/// Features the step size contributes to the network input.
///
/// raw_append: [dt / ref_dt].
/// fourier:    [u, sin(w_k u), cos(w_k u)] for k < n_freq, u = dt / ref_dt,
///             w_k = 2^k / 4.
/// ref_dt = 1 feeds the raw step.
struct DtEmbedding {
  DtEmbeddingKind kind = DtEmbeddingKind::raw_append;
  double ref_dt = 1.0;
  std::uint32_t n_freq = 4;

  std::size_t width() const { return kind == DtEmbeddingKind::raw_append ? 1 : 1 + 2 * std::size_t{n_freq}; }

  void embed(double dt, std::span<double> out) const {
    const double u = dt / ref_dt;
    out[0] = u;
    if (kind == DtEmbeddingKind::fourier) {
      for (std::uint32_t k = 0; k < n_freq; ++k) {
        const double w = std::ldexp(1.0, static_cast<int>(k)) * 0.25;
        out[1 + 2 * k] = std::sin(w * u);
        out[2 + 2 * k] = std::cos(w * u);
      }
    }
  }

  friend bool operator==(const DtEmbedding&, const DtEmbedding&) = default;
};

/// The time-conditioned secant velocity field, acting on normalized states.
struct FieldModel {
  nn::MlpParams mlp;
  std::size_t state_dim = 0;
  DtEmbedding dt_embedding;
  std::uint32_t signature_version = 1;

  std::size_t dimension() const { return state_dim; }
  std::size_t input_width() const { return state_dim + dt_embedding.width(); }

  void validate() const {
    mlp.validate();
    if (state_dim == 0) throw ShapeError("field model state dimension must be positive");
    if (mlp.input_width() != input_width())
      throw ShapeError("field model input width " + std::to_string(mlp.input_width()) + " != state_dim + dt width " +
                       std::to_string(input_width()));
    if (mlp.output_width() != state_dim) throw ShapeError("field model output width must equal state_dim");
    if (!(dt_embedding.ref_dt > 0.0) || !std::isfinite(dt_embedding.ref_dt))
      throw ParameterError("dt embedding reference interval must be positive");
  }

  /// Network input rows [s~, embed(dt)] for a batch of queries.
  nn::DenseTensor assemble_inputs(const std::vector<State>& states, std::span<const double> dts) const {
    if (states.size() != dts.size()) throw ShapeError("state and dt batch sizes differ");
    const std::size_t w = input_width();
    nn::DenseTensor x({states.size(), w});
    for (std::size_t r = 0; r < states.size(); ++r) {
      if (states[r].size() != state_dim)
        throw ShapeError("state width " + std::to_string(states[r].size()) + " != " + std::to_string(state_dim));
      if (!std::isfinite(dts[r])) throw InputError("step size is not finite");
      auto row = x.row(r);
      for (std::size_t i = 0; i < state_dim; ++i) {
        if (!std::isfinite(states[r][i])) throw InputError("state is not finite");
        row[i] = states[r][i];
      }
      dt_embedding.embed(dts[r], row.subspan(state_dim));
    }
    return x;
  }

  std::vector<double> operator()(std::span<const double> s_norm, double dt) const;

  std::vector<State> evaluate_many(const std::vector<State>& states, std::span<const double> dts) const {
    if (states.empty()) return {};
    const auto y = nn::mlp_forward(mlp, assemble_inputs(states, dts));
    std::vector<State> out(states.size());
    for (std::size_t r = 0; r < states.size(); ++r) {
      const auto row = y.row(r);
      out[r].assign(row.begin(), row.end());
    }
    return out;
  }

  friend bool operator==(const FieldModel&, const FieldModel&) = default;
};

struct FieldModelConfig {
  std::size_t state_dim = 0;
  std::vector<std::size_t> hidden{128, 128, 128};
  nn::Activation activation = nn::Activation::tanh;
  DtEmbedding dt_embedding;
  double final_scale = 0.1;
};

inline FieldModel make_field_model(const FieldModelConfig& cfg, Rng& rng) {
  FieldModel m;
  m.state_dim = cfg.state_dim;
  m.dt_embedding = cfg.dt_embedding;
  m.mlp = nn::make_mlp(cfg.state_dim + cfg.dt_embedding.width(), cfg.hidden, cfg.state_dim, cfg.activation, rng,
                       cfg.final_scale);
  m.validate();
  return m;
}

/// psi~(s~, dt) in normalized velocity coordinates. dt may be negative.
inline std::vector<double> eval_field(const FieldModel& model, std::span<const double> state_norm, double dt) {
  if (state_norm.size() != model.state_dim)
    throw ShapeError("state width " + std::to_string(state_norm.size()) + " != " + std::to_string(model.state_dim));
  if (!std::isfinite(dt)) throw InputError("step size is not finite");
  nn::DenseTensor x({model.input_width()});
  for (std::size_t i = 0; i < model.state_dim; ++i) {
    if (!std::isfinite(state_norm[i])) throw InputError("state is not finite");
    x[i] = state_norm[i];
  }
  model.dt_embedding.embed(dt, std::span<double>(x.data()).subspan(model.state_dim));
  return nn::mlp_forward(model.mlp, x).data();
}

inline std::vector<double> FieldModel::operator()(std::span<const double> s_norm, double dt) const {
  return eval_field(*this, s_norm, dt);
}

/// s_{t+dt} = s_t + dt * sigma_s * [sigma_v * psi~ + mu_v] (cascaded form;
/// the other schemes use their own inverse velocity map).
template <SecantField F>
std::vector<double> predict_step(const F& field, const NormStats& stats, std::span<const double> state_phys,
                                 double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("predict_step needs a positive finite dt");
  const auto s_norm = normalize_state(stats, state_phys);
  const auto v = denormalize_velocity(stats, field(s_norm, dt));
  std::vector<double> out(state_phys.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state_phys[i] + dt * v[i];
  return out;
}

}  // namespace cvf
