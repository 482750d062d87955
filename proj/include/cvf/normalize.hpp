#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"

namespace cvf {

/// How secant velocities are standardized relative to states.
///
/// cascaded: v is first pushed forward by 1/sigma_s, then standardized with
///           statistics of v/sigma_s.
/// independent: v standardized with its own raw statistics.
/// single: v standardized with the state statistics.
enum class NormScheme : std::uint8_t { cascaded = 0, independent = 1, single = 2 };

inline std::string to_string(NormScheme s) {
  switch (s) {
    case NormScheme::cascaded: return "cascaded";
    case NormScheme::independent: return "independent";
    case NormScheme::single: return "single";
  }
  return "unknown";
}

inline NormScheme parse_norm_scheme(const std::string& s) {
  if (s == "cascaded") return NormScheme::cascaded;
  if (s == "independent") return NormScheme::independent;
  if (s == "single") return NormScheme::single;
  throw ParameterError("unknown normalization scheme '" + s + "'");
}

inline constexpr double kSigmaFloor = 1e-8;

/// Per-channel normalization statistics maintained by EMA.
///
/// A state vector is laid out channel-major: component i belongs to channel
/// i / spatial_size. For vector ODEs spatial_size is 1.
struct NormStats {
  NormScheme scheme = NormScheme::cascaded;
  double ema_decay = 0.999;
  std::size_t spatial_size = 1;
  std::vector<double> mu_s, sigma_s;
  std::vector<double> mu_v, sigma_v;
  std::uint64_t updates = 0;
  /// Channels floored at kSigmaFloor during the most recent update.
  std::uint32_t floored_channels = 0;

  static NormStats identity(std::size_t channels, std::size_t spatial_size = 1,
                            NormScheme scheme = NormScheme::cascaded, double ema_decay = 0.999) {
    NormStats s;
    s.scheme = scheme;
    s.ema_decay = ema_decay;
    s.spatial_size = spatial_size;
    s.mu_s.assign(channels, 0.0);
    s.sigma_s.assign(channels, 1.0);
    s.mu_v.assign(channels, 0.0);
    s.sigma_v.assign(channels, 1.0);
    return s;
  }

  std::size_t channels() const noexcept { return mu_s.size(); }
  std::size_t state_dim() const noexcept { return channels() * spatial_size; }
  std::size_t channel_of(std::size_t component) const noexcept { return component / spatial_size; }

  /// Per-component gain a and offset b such that d(s~)/dt = a * v~ + b.
  double rate_gain(std::size_t c) const {
    switch (scheme) {
      case NormScheme::cascaded: return sigma_v[c];
      case NormScheme::independent: return sigma_v[c] / sigma_s[c];
      case NormScheme::single: return 1.0;
    }
    return 1.0;
  }
  double rate_offset(std::size_t c) const {
    switch (scheme) {
      case NormScheme::cascaded: return mu_v[c];
      case NormScheme::independent: return mu_v[c] / sigma_s[c];
      case NormScheme::single: return mu_s[c] / sigma_s[c];
    }
    return 0.0;
  }

  void validate() const {
    const std::size_t n = channels();
    if (n == 0) throw ParameterError("normalization stats have no channels");
    if (spatial_size == 0) throw ParameterError("normalization spatial size must be positive");
    if (sigma_s.size() != n || mu_v.size() != n || sigma_v.size() != n)
      throw ShapeError("normalization statistic arrays differ in length");
    if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw ParameterError("ema_decay must lie in [0, 1]");
    for (std::size_t c = 0; c < n; ++c)
      if (!(sigma_s[c] > 0.0) || !(sigma_v[c] > 0.0)) throw ParameterError("normalization scale must be positive");
  }

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

namespace detail {

inline void check_dim(const NormStats& st, std::size_t n) {
  if (n != st.state_dim())
    throw ShapeError("vector length " + std::to_string(n) + " does not match normalization layout " +
                     std::to_string(st.state_dim()));
}

struct ChannelMoments {
  std::vector<double> mean, var;
};

/// Population mean/variance per channel over all rows and spatial points.
inline ChannelMoments channel_moments(const std::vector<std::vector<double>>& rows, std::size_t channels,
                                      std::size_t spatial, const std::vector<double>* divisor) {
  ChannelMoments m{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  const double count = static_cast<double>(rows.size() * spatial);
  for (std::size_t c = 0; c < channels; ++c) {
    const double div = divisor ? (*divisor)[c] : 1.0;
    double sum = 0.0;
    for (const auto& r : rows)
      for (std::size_t k = 0; k < spatial; ++k) sum += r[c * spatial + k] / div;
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& r : rows)
      for (std::size_t k = 0; k < spatial; ++k) {
        const double d = r[c * spatial + k] / div - mean;
        ss += d * d;
      }
    m.mean[c] = mean;
    m.var[c] = ss / count;
  }
  return m;
}

}  // namespace detail

/// EMA update of the statistics from one batch.
///
/// State statistics are updated first; the velocity statistics of the
/// cascaded scheme are then computed from v / sigma_s using the updated
/// sigma_s. The first update adopts the batch statistics directly. Moments
/// are averaged on (mean, variance); sigma is the square root of the
/// averaged variance, floored at kSigmaFloor.
inline NormStats update_stats(NormStats stats, const std::vector<std::vector<double>>& states,
                              const std::vector<std::vector<double>>& velocities) {
  if (states.empty() || velocities.empty()) throw InputError("normalization update needs nonempty batches");
  const std::size_t channels = stats.channels();
  for (const auto& s : states) detail::check_dim(stats, s.size());
  for (const auto& v : velocities) detail::check_dim(stats, v.size());

  const double decay = stats.updates == 0 ? 0.0 : stats.ema_decay;
  stats.floored_channels = 0;
  auto blend = [&](std::vector<double>& mu, std::vector<double>& sigma, const detail::ChannelMoments& m) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double old_var = sigma[c] * sigma[c];
      mu[c] = decay * mu[c] + (1.0 - decay) * m.mean[c];
      const double var = decay * old_var + (1.0 - decay) * m.var[c];
      double sd = std::sqrt(var);
      if (!(sd >= kSigmaFloor)) {
        sd = kSigmaFloor;
        ++stats.floored_channels;
      }
      sigma[c] = sd;
    }
  };

  blend(stats.mu_s, stats.sigma_s, detail::channel_moments(states, channels, stats.spatial_size, nullptr));
  switch (stats.scheme) {
    case NormScheme::cascaded:
      blend(stats.mu_v, stats.sigma_v,
            detail::channel_moments(velocities, channels, stats.spatial_size, &stats.sigma_s));
      break;
    case NormScheme::independent:
      blend(stats.mu_v, stats.sigma_v, detail::channel_moments(velocities, channels, stats.spatial_size, nullptr));
      break;
    case NormScheme::single:
      stats.mu_v = stats.mu_s;
      stats.sigma_v = stats.sigma_s;
      break;
  }
  ++stats.updates;
  return stats;
}

inline std::vector<double> normalize_state(const NormStats& st, std::span<const double> s) {
  detail::check_dim(st, s.size());
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t c = st.channel_of(i);
    out[i] = (s[i] - st.mu_s[c]) / st.sigma_s[c];
  }
  return out;
}

inline std::vector<double> denormalize_state(const NormStats& st, std::span<const double> s_norm) {
  detail::check_dim(st, s_norm.size());
  std::vector<double> out(s_norm.size());
  for (std::size_t i = 0; i < s_norm.size(); ++i) {
    const std::size_t c = st.channel_of(i);
    out[i] = st.sigma_s[c] * s_norm[i] + st.mu_s[c];
  }
  return out;
}

/// Physical secant velocity -> normalized network target.
inline std::vector<double> normalize_secant_velocity(const NormStats& st, std::span<const double> v) {
  detail::check_dim(st, v.size());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t c = st.channel_of(i);
    switch (st.scheme) {
      case NormScheme::cascaded: out[i] = (v[i] / st.sigma_s[c] - st.mu_v[c]) / st.sigma_v[c]; break;
      case NormScheme::independent: out[i] = (v[i] - st.mu_v[c]) / st.sigma_v[c]; break;
      case NormScheme::single: out[i] = (v[i] - st.mu_s[c]) / st.sigma_s[c]; break;
    }
  }
  return out;
}

/// Normalized velocity -> physical velocity (the inverse pushforward).
inline std::vector<double> denormalize_velocity(const NormStats& st, std::span<const double> v_norm) {
  detail::check_dim(st, v_norm.size());
  std::vector<double> out(v_norm.size());
  for (std::size_t i = 0; i < v_norm.size(); ++i) {
    const std::size_t c = st.channel_of(i);
    switch (st.scheme) {
      case NormScheme::cascaded: out[i] = st.sigma_s[c] * (st.sigma_v[c] * v_norm[i] + st.mu_v[c]); break;
      case NormScheme::independent: out[i] = st.sigma_v[c] * v_norm[i] + st.mu_v[c]; break;
      case NormScheme::single: out[i] = st.sigma_s[c] * v_norm[i] + st.mu_s[c]; break;
    }
  }
  return out;
}

/// s~ + dt * d(s~)/dt, where the rate is recovered from a normalized velocity.
inline std::vector<double> advance_normalized(const NormStats& st, std::span<const double> s_norm, double dt,
                                              std::span<const double> v_norm) {
  detail::check_dim(st, s_norm.size());
  detail::check_dim(st, v_norm.size());
  std::vector<double> out(s_norm.size());
  for (std::size_t i = 0; i < s_norm.size(); ++i) {
    const std::size_t c = st.channel_of(i);
    out[i] = s_norm[i] + dt * (st.rate_gain(c) * v_norm[i] + st.rate_offset(c));
  }
  return out;
}

}  // namespace cvf
