#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cvf/binary_io.hpp"
#include "cvf/error.hpp"

namespace cvf {

inline constexpr std::uint32_t kDatasetVersion = 1;

/// Time-stamped state sequences sharing one time grid.
///
/// Payload layout is [traj][step][channel][spatial...], row-major. A state is
/// the contiguous block of channels * spatial_size values for one (traj, step).
struct TrajectoryDataset {
  std::size_t n_traj = 0;
  std::size_t n_steps = 0;
  std::size_t channels = 0;
  std::vector<std::size_t> spatial;  // empty for vector-valued systems
  double base_dt = 0.0;
  std::vector<double> times;
  std::vector<std::string> labels;
  std::string metadata;  // key=value lines
  std::vector<double> data;

  std::size_t spatial_size() const {
    return std::accumulate(spatial.begin(), spatial.end(), std::size_t{1}, std::multiplies<>{});
  }
  std::size_t state_dim() const { return channels * spatial_size(); }

  std::span<const double> state(std::size_t traj, std::size_t step) const {
    return {data.data() + (traj * n_steps + step) * state_dim(), state_dim()};
  }
  std::span<double> state(std::size_t traj, std::size_t step) {
    return {data.data() + (traj * n_steps + step) * state_dim(), state_dim()};
  }

  std::vector<double> state_copy(std::size_t traj, std::size_t step) const {
    const auto s = state(traj, step);
    return {s.begin(), s.end()};
  }

  void allocate() { data.assign(n_traj * n_steps * state_dim(), 0.0); }

  void validate() const {
    if (n_traj == 0 || n_steps == 0 || channels == 0) throw ValidationError("dataset is empty");
    if (times.size() != n_steps) throw ValidationError("dataset time array does not match step count");
    if (data.size() != n_traj * n_steps * state_dim()) throw ValidationError("dataset payload size is inconsistent");
    if (!labels.empty() && labels.size() != channels) throw ValidationError("dataset channel labels do not match");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i])) throw ValidationError("dataset time is not finite");
      if (i > 0 && !(times[i] > times[i - 1])) throw ValidationError("dataset times must be strictly increasing");
    }
    for (double v : data)
      if (!std::isfinite(v)) throw ValidationError("dataset contains non-finite values");
  }

  friend bool operator==(const TrajectoryDataset&, const TrajectoryDataset&) = default;
};

// Layout (little-endian):
//   "CVFD" u32 version u64 n_traj u64 n_steps u32 channels u32 n_spatial u64 spatial[n_spatial]
//   f64 base_dt f64 times[n_steps]
//   u32 n_labels str labels[n_labels] str metadata
//   f64 payload[n_traj * n_steps * state_dim]
//   u64 FNV-1a of all preceding bytes
inline std::vector<std::uint8_t> encode_dataset(const TrajectoryDataset& d) {
  d.validate();
  io::ByteWriter w;
  w.magic("CVFD");
  w.u32(kDatasetVersion);
  w.u64(d.n_traj);
  w.u64(d.n_steps);
  w.u32(static_cast<std::uint32_t>(d.channels));
  w.u32(static_cast<std::uint32_t>(d.spatial.size()));
  for (std::size_t s : d.spatial) w.u64(s);
  w.f64(d.base_dt);
  w.f64s(d.times);
  w.u32(static_cast<std::uint32_t>(d.labels.size()));
  for (const auto& l : d.labels) w.str(l);
  w.str(d.metadata);
  w.f64s(d.data);
  w.seal();
  return w.bytes();
}

inline TrajectoryDataset decode_dataset(std::vector<std::uint8_t> bytes, const std::string& what = "dataset") {
  io::ByteReader r(std::move(bytes), what);
  r.expect_magic("CVFD");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) throw FormatError(what + ": unsupported dataset version " + std::to_string(version));
  TrajectoryDataset d;
  d.n_traj = r.u64();
  d.n_steps = r.u64();
  d.channels = r.u32();
  const std::uint32_t n_spatial = r.u32();
  r.need_elements(n_spatial, 8);
  d.spatial.resize(n_spatial);
  for (auto& s : d.spatial) s = r.u64();
  d.base_dt = r.f64();
  d.times = r.f64s(d.n_steps);
  const std::uint32_t n_labels = r.u32();
  r.need_elements(n_labels, 4);
  d.labels.resize(n_labels);
  for (auto& l : d.labels) l = r.str();
  d.metadata = r.str();
  const std::uint64_t sd = d.state_dim();
  if (sd == 0 || d.n_traj == 0 || d.n_steps == 0) throw FormatError(what + ": empty dataset header");
  const std::uint64_t per_traj = d.n_steps * sd;
  if (per_traj / sd != d.n_steps || (d.n_traj * per_traj) / per_traj != d.n_traj)
    throw FormatError(what + ": dataset header overflows");
  d.data = r.f64s(d.n_traj * per_traj);
  r.check_seal();
  try {
    d.validate();
  } catch (const Error& e) {
    throw FormatError(what + ": " + e.what());
  }
  return d;
}

inline void save_dataset(const std::string& path, const TrajectoryDataset& d) { io::write_file(path, encode_dataset(d)); }

inline TrajectoryDataset load_dataset(const std::string& path) { return decode_dataset(io::read_file(path), path); }

}  // namespace cvf
