#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvf/binary_io.hpp"
#include "cvf/model.hpp"
#include "cvf/nn/adamw.hpp"
#include "cvf/normalize.hpp"

namespace cvf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Immutable training snapshot.
struct Checkpoint {
  FieldModel model;
  NormStats stats;
  std::string config_echo;  // key=value lines of the resolved training config
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  double delta_min = 0.0;
  nn::AdamWState optimizer;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Layout (all little-endian):
//   "CVF1" u32 version u32 state_dim u32 input_width u32 n_layers
//   per layer: u32 in, u32 out, u8 activation
//   u8 dt_kind f64 ref_dt u32 n_freq u32 signature_version
//   parameter block: f64 weights then biases, layer by layer
//   stats block: u8 scheme f64 decay u64 spatial u32 channels u64 updates u32 floored
//                f64 mu_s[c] sigma_s[c] mu_v[c] sigma_v[c]
//   metadata: u64 seed u64 epoch u64 step f64 delta_min str config_echo
//   optimizer: u64 step u64 n f64 m[n] f64 v[n]
//   u64 FNV-1a of all preceding bytes
inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  c.model.validate();
  io::ByteWriter w;
  w.magic("CVF1");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.model.state_dim));
  w.u32(static_cast<std::uint32_t>(c.model.input_width()));
  w.u32(static_cast<std::uint32_t>(c.model.mlp.layers.size()));
  for (const auto& l : c.model.mlp.layers) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.activation));
  }
  w.u8(static_cast<std::uint8_t>(c.model.dt_embedding.kind));
  w.f64(c.model.dt_embedding.ref_dt);
  w.u32(c.model.dt_embedding.n_freq);
  w.u32(c.model.signature_version);
  for (const auto& l : c.model.mlp.layers) {
    w.f64s(l.weight);
    w.f64s(l.bias);
  }

  const auto& s = c.stats;
  w.u8(static_cast<std::uint8_t>(s.scheme));
  w.f64(s.ema_decay);
  w.u64(s.spatial_size);
  w.u32(static_cast<std::uint32_t>(s.channels()));
  w.u64(s.updates);
  w.u32(s.floored_channels);
  w.f64s(s.mu_s);
  w.f64s(s.sigma_s);
  w.f64s(s.mu_v);
  w.f64s(s.sigma_v);

  w.u64(c.seed);
  w.u64(c.epoch);
  w.u64(c.step);
  w.f64(c.delta_min);
  w.str(c.config_echo);

  w.u64(c.optimizer.step);
  w.u64(c.optimizer.m.size());
  w.f64s(c.optimizer.m);
  w.f64s(c.optimizer.v);
  w.seal();
  return w.bytes();
}

inline Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& what = "checkpoint") {
  io::ByteReader r(std::move(bytes), what);
  r.expect_magic("CVF1");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError(what + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.model.state_dim = r.u32();
  const std::uint32_t input_width = r.u32();
  const std::uint32_t n_layers = r.u32();
  r.need_elements(n_layers, 9);
  c.model.mlp.layers.resize(n_layers);
  for (auto& l : c.model.mlp.layers) {
    l.in = r.u32();
    l.out = r.u32();
    const std::uint8_t act = r.u8();
    if (act > 2) throw FormatError(what + ": unknown activation tag");
    l.activation = static_cast<nn::Activation>(act);
  }
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError(what + ": unknown dt embedding tag");
  c.model.dt_embedding.kind = static_cast<DtEmbeddingKind>(kind);
  c.model.dt_embedding.ref_dt = r.f64();
  c.model.dt_embedding.n_freq = r.u32();
  c.model.signature_version = r.u32();
  for (auto& l : c.model.mlp.layers) {
    r.need_elements(std::uint64_t{l.in} * l.out, 8);
    l.weight = r.f64s(l.in * l.out);
    l.bias = r.f64s(l.out);
  }
  if (c.model.input_width() != input_width) throw FormatError(what + ": header input width is inconsistent");

  auto& s = c.stats;
  const std::uint8_t scheme = r.u8();
  if (scheme > 2) throw FormatError(what + ": unknown normalization scheme tag");
  s.scheme = static_cast<NormScheme>(scheme);
  s.ema_decay = r.f64();
  s.spatial_size = r.u64();
  const std::uint32_t channels = r.u32();
  s.updates = r.u64();
  s.floored_channels = r.u32();
  s.mu_s = r.f64s(channels);
  s.sigma_s = r.f64s(channels);
  s.mu_v = r.f64s(channels);
  s.sigma_v = r.f64s(channels);

  c.seed = r.u64();
  c.epoch = r.u64();
  c.step = r.u64();
  c.delta_min = r.f64();
  c.config_echo = r.str();

  c.optimizer.step = r.u64();
  const std::uint64_t n = r.u64();
  r.need_elements(n, 16);
  c.optimizer.m = r.f64s(n);
  c.optimizer.v = r.f64s(n);
  r.check_seal();

  try {
    c.model.validate();
    s.validate();
  } catch (const Error& e) {
    throw FormatError(what + ": " + e.what());
  }
  if (s.state_dim() != c.model.state_dim) throw FormatError(what + ": statistics layout does not match model");
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  io::write_file(path, encode_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path), path); }

}  // namespace cvf
