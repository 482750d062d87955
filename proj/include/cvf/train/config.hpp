#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "cvf/error.hpp"
#include "cvf/model.hpp"
#include "cvf/normalize.hpp"

namespace cvf {

enum class RuptureMode : std::uint8_t { semigroup = 0, bidirectional = 1, off = 2 };

inline std::string to_string(RuptureMode m) {
  switch (m) {
    case RuptureMode::semigroup: return "semigroup";
    case RuptureMode::bidirectional: return "bidirectional";
    case RuptureMode::off: return "off";
  }
  return "unknown";
}

inline RuptureMode parse_rupture_mode(const std::string& s) {
  if (s == "semigroup" || s == "on") return RuptureMode::semigroup;
  if (s == "bidirectional") return RuptureMode::bidirectional;
  if (s == "off") return RuptureMode::off;
  throw ParameterError("unknown rupture mode '" + s + "'");
}

/// How the solver floor delta_min is recorded in the checkpoint.
enum class DeltaMinPolicy : std::uint8_t { min_pair = 0, fixed = 1 };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double base_lr = 1e-4;
  double ema_decay = 0.999;
  RuptureMode rupture_mode = RuptureMode::semigroup;
  double rupture_weight = 1.0;
  /// k < 0: keep every |k|-th frame; k > 0: random subset of ceil(N/k) frames,
  /// redrawn every epoch; 0: no downsampling.
  int downsample = 0;
  std::uint64_t seed = 0;
  DeltaMinPolicy delta_min_policy = DeltaMinPolicy::min_pair;
  double delta_min_fixed = 0.0;
  NormScheme norm_scheme = NormScheme::cascaded;

  std::vector<std::size_t> hidden{128, 128, 128};
  nn::Activation activation = nn::Activation::tanh;
  DtEmbeddingKind dt_embedding = DtEmbeddingKind::raw_append;
  std::uint32_t fourier_freqs = 4;
  /// Divide dt by the dataset base interval before embedding; false feeds raw dt.
  bool normalize_dt = true;
  double final_scale = 0.1;

  /// Validate every n epochs (0 disables validation rollouts).
  std::size_t val_every = 1;

  bool rupture_active() const { return rupture_mode != RuptureMode::off && rupture_weight != 0.0; }

  void validate() const {
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (!(base_lr >= 0.0)) throw ValidationError("base_lr must be non-negative");
    if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw ValidationError("ema_decay must lie in [0, 1]");
    if (!(rupture_weight >= 0.0)) throw ValidationError("rupture_weight must be non-negative");
    if (hidden.empty()) throw ValidationError("at least one hidden layer is required");
    for (std::size_t h : hidden)
      if (h == 0) throw ValidationError("hidden widths must be positive");
    if (delta_min_policy == DeltaMinPolicy::fixed && !(delta_min_fixed > 0.0))
      throw ValidationError("fixed delta_min must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::size_t> parse_widths(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(trim(item)));
  return out;
}

}  // namespace detail

/// Apply one key=value setting. Unknown keys are rejected.
inline void apply_train_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "epochs") c.epochs = std::stoul(value);
    else if (key == "batch_size") c.batch_size = std::stoul(value);
    else if (key == "base_lr") c.base_lr = std::stod(value);
    else if (key == "ema_decay") c.ema_decay = std::stod(value);
    else if (key == "rupture_mode") c.rupture_mode = parse_rupture_mode(value);
    else if (key == "rupture_weight") c.rupture_weight = std::stod(value);
    else if (key == "downsample") c.downsample = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "delta_min") {
      if (value == "min-pair") {
        c.delta_min_policy = DeltaMinPolicy::min_pair;
      } else {
        c.delta_min_policy = DeltaMinPolicy::fixed;
        c.delta_min_fixed = std::stod(value);
      }
    } else if (key == "norm_scheme") c.norm_scheme = parse_norm_scheme(value);
    else if (key == "hidden") c.hidden = detail::parse_widths(value);
    else if (key == "activation") c.activation = nn::parse_activation(value);
    else if (key == "dt_embedding") c.dt_embedding = parse_dt_embedding(value);
    else if (key == "fourier_freqs") c.fourier_freqs = static_cast<std::uint32_t>(std::stoul(value));
    else if (key == "normalize_dt") c.normalize_dt = value == "true" || value == "1";
    else if (key == "final_scale") c.final_scale = std::stod(value);
    else if (key == "val_every") c.val_every = std::stoul(value);
    else throw ValidationError("unknown training setting '" + key + "'");
  } catch (const std::logic_error&) {
    throw ValidationError("bad value '" + value + "' for training setting '" + key + "'");
  }
}

/// Parse `key = value` lines; '#' starts a comment.
inline TrainConfig parse_train_config(const std::string& text, TrainConfig base = {}) {
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line without '=': " + line);
    apply_train_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

/// Canonical key=value rendering; parse_train_config(echo(c)) == c.
inline std::string echo(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "epochs=" << c.epochs << "\nbatch_size=" << c.batch_size << "\nbase_lr=" << c.base_lr
     << "\nema_decay=" << c.ema_decay << "\nrupture_mode=" << to_string(c.rupture_mode)
     << "\nrupture_weight=" << c.rupture_weight << "\ndownsample=" << c.downsample << "\nseed=" << c.seed
     << "\ndelta_min=";
  if (c.delta_min_policy == DeltaMinPolicy::min_pair) os << "min-pair";
  else os << c.delta_min_fixed;
  os << "\nnorm_scheme=" << to_string(c.norm_scheme) << "\nhidden=";
  for (std::size_t i = 0; i < c.hidden.size(); ++i) os << (i ? "," : "") << c.hidden[i];
  os << "\nactivation=" << nn::to_string(c.activation) << "\ndt_embedding=" << to_string(c.dt_embedding)
     << "\nfourier_freqs=" << c.fourier_freqs << "\nnormalize_dt=" << (c.normalize_dt ? "true" : "false")
     << "\nfinal_scale=" << c.final_scale << "\nval_every=" << c.val_every << "\n";
  return os.str();
}

}  // namespace cvf
