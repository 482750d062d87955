#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/nn/tensor.hpp"
#include "cvf/rng.hpp"

namespace cvf::nn {

enum class Activation : std::uint8_t { identity = 0, tanh = 1, gelu = 2 };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::gelu: return "gelu";
  }
  return "unknown";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "gelu") return Activation::gelu;
  throw ParameterError("unknown activation '" + s + "'");
}

namespace detail {

inline constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluCubic = 0.044715;

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::tanh: return std::tanh(z);
    case Activation::gelu: {
      const double t = std::tanh(kGeluScale * (z + kGeluCubic * z * z * z));
      return 0.5 * z * (1.0 + t);
    }
  }
  return z;
}

inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::gelu: {
      const double t = std::tanh(kGeluScale * (z + kGeluCubic * z * z * z));
      return 0.5 * (1.0 + t) +
             0.5 * z * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * z * z);
    }
  }
  return 1.0;
}

}  // namespace detail

/// Fully connected layer y = act(W x + b), W stored out x in row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;
  std::vector<double> weight;
  std::vector<double> bias;

  double& w(std::size_t o, std::size_t i) { return weight[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weight[o * in + i]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().out; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Same structure, every entry zero.
  MlpParams zeros_like() const {
    MlpParams z = *this;
    for (auto& l : z.layers) {
      std::fill(l.weight.begin(), l.weight.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return z;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("mlp has no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      if (l.in == 0 || l.out == 0) throw ShapeError("mlp layer " + std::to_string(k) + " has zero width");
      if (l.weight.size() != l.in * l.out || l.bias.size() != l.out)
        throw ShapeError("mlp layer " + std::to_string(k) + " storage does not match its dimensions");
      if (k > 0 && layers[k - 1].out != l.in)
        throw ShapeError("mlp layer " + std::to_string(k) + " input width " + std::to_string(l.in) +
                         " does not chain with previous output " + std::to_string(layers[k - 1].out));
      for (double v : l.weight)
        if (!std::isfinite(v)) throw InputError("mlp weight is not finite");
      for (double v : l.bias)
        if (!std::isfinite(v)) throw InputError("mlp bias is not finite");
    }
  }

  /// Visit every scalar parameter in a fixed order (layer, weights, bias).
  template <class Fn>
  void for_each(Fn&& fn) {
    for (auto& l : layers) {
      for (double& v : l.weight) fn(v);
      for (double& v : l.bias) fn(v);
    }
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& l : layers) {
      for (double v : l.weight) fn(v);
      for (double v : l.bias) fn(v);
    }
  }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Build an MLP with `hidden` widths between `in` and `out`.
///
/// Weights and biases are drawn uniformly from +-1/sqrt(fan_in); the final
/// layer is additionally multiplied by `final_scale` so that a fresh field is
/// close to zero. Pass final_scale = 0 for an exactly zero output layer.
inline MlpParams make_mlp(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                          Activation hidden_activation, Rng& rng, double final_scale = 0.1) {
  MlpParams p;
  std::size_t prev = in;
  const std::size_t n_layers = hidden.size() + 1;
  for (std::size_t k = 0; k < n_layers; ++k) {
    DenseLayer l;
    l.in = prev;
    l.out = k + 1 < n_layers ? hidden[k] : out;
    l.activation = k + 1 < n_layers ? hidden_activation : Activation::identity;
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    const double scale = k + 1 < n_layers ? 1.0 : final_scale;
    l.weight.resize(l.in * l.out);
    l.bias.resize(l.out);
    for (double& v : l.weight) v = scale * rng.uniform(-bound, bound);
    for (double& v : l.bias) v = scale * rng.uniform(-bound, bound);
    prev = l.out;
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

/// Intermediate values recorded by a forward pass for reuse in backward.
struct MlpTape {
  std::vector<DenseTensor> layer_inputs;
  std::vector<DenseTensor> pre_activations;
};

namespace detail {

inline void check_input(const MlpParams& params, const DenseTensor& input) {
  if (params.layers.empty()) throw ShapeError("mlp has no layers");
  if (input.rank() == 0 || input.rank() > 2)
    throw ShapeError("mlp input must be rank 1 or 2, got shape " + shape_string(input.shape()));
  if (input.width() != params.input_width())
    throw ShapeError("mlp input width " + std::to_string(input.width()) + " does not match layer width " +
                     std::to_string(params.input_width()));
}

inline std::vector<std::size_t> shape_with_width(const DenseTensor& like, std::size_t width) {
  std::vector<std::size_t> s = like.shape();
  s.back() = width;
  return s;
}

}  // namespace detail

/// Forward pass; records per-layer inputs and pre-activations into `tape`.
inline DenseTensor mlp_forward(const MlpParams& params, const DenseTensor& input, MlpTape* tape) {
  detail::check_input(params, input);
  const std::size_t rows = input.rows();
  if (tape) {
    tape->layer_inputs.clear();
    tape->pre_activations.clear();
  }
  DenseTensor x = input;
  for (const auto& l : params.layers) {
    DenseTensor z(detail::shape_with_width(input, l.out));
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = x.data().data() + r * l.in;
      double* zr = z.data().data() + r * l.out;
      for (std::size_t o = 0; o < l.out; ++o) {
        const double* wo = l.weight.data() + o * l.in;
        double acc = l.bias[o];
        for (std::size_t i = 0; i < l.in; ++i) acc += wo[i] * xr[i];
        zr[o] = acc;
      }
    }
    DenseTensor y = z;
    if (l.activation != Activation::identity)
      for (double& v : y.data()) v = detail::activate(l.activation, v);
    if (tape) {
      tape->layer_inputs.push_back(std::move(x));
      tape->pre_activations.push_back(std::move(z));
    }
    x = std::move(y);
  }
  return x;
}

inline DenseTensor mlp_forward(const MlpParams& params, const DenseTensor& input) {
  return mlp_forward(params, input, nullptr);
}

/// Reverse pass over a recorded tape.
///
/// Adds d<upstream, output>/d(params) into `param_grads` (which must share the
/// structure of `params`) and returns the gradient with respect to the input.
inline DenseTensor mlp_backward(const MlpParams& params, const MlpTape& tape, const DenseTensor& upstream,
                                MlpParams& param_grads) {
  if (tape.layer_inputs.size() != params.layers.size())
    throw ShapeError("tape does not match network depth");
  const DenseTensor& last_pre = tape.pre_activations.back();
  if (upstream.shape() != last_pre.shape())
    throw ShapeError("upstream shape " + shape_string(upstream.shape()) + " does not match output shape " +
                     shape_string(last_pre.shape()));
  const std::size_t rows = upstream.rows();
  DenseTensor g = upstream;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const auto& l = params.layers[k];
    auto& gl = param_grads.layers[k];
    const DenseTensor& x = tape.layer_inputs[k];
    const DenseTensor& z = tape.pre_activations[k];
    if (l.activation != Activation::identity)
      for (std::size_t j = 0; j < g.size(); ++j) g[j] *= detail::activate_derivative(l.activation, z[j]);

    DenseTensor gin(detail::shape_with_width(x, l.in));
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.data().data() + r * l.out;
      const double* xr = x.data().data() + r * l.in;
      double* gir = gin.data().data() + r * l.in;
      for (std::size_t o = 0; o < l.out; ++o) {
        const double go = gr[o];
        if (go == 0.0) continue;
        gl.bias[o] += go;
        double* gwo = gl.weight.data() + o * l.in;
        const double* wo = l.weight.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) {
          gwo[i] += go * xr[i];
          gir[i] += go * wo[i];
        }
      }
    }
    g = std::move(gin);
  }
  return g;
}

struct MlpGradients {
  MlpParams params;
  DenseTensor input;
};

/// Exact reverse-mode gradients of <upstream, mlp(input)>.
inline MlpGradients mlp_backward(const MlpParams& params, const DenseTensor& input, const DenseTensor& upstream) {
  MlpTape tape;
  mlp_forward(params, input, &tape);
  MlpGradients out{params.zeros_like(), {}};
  out.input = mlp_backward(params, tape, upstream, out.params);
  return out;
}

}  // namespace cvf::nn
