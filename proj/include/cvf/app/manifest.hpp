#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvf/binary_io.hpp"
#include "cvf/checkpoint.hpp"
#include "cvf/datagen/dataset.hpp"
#include "cvf/error.hpp"

namespace cvf::app {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr std::uint32_t kManifestVersion = 1;

/// One artifact written by a command. The hash covers the file content with
/// the named CSV columns removed, so timing columns do not affect it.
struct OutputRecord {
  std::string path;  // relative to the output directory
  std::string hash;
  std::vector<std::string> volatile_columns;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // fully resolved, replayable
  std::string config_hash;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::string out_dir;
  std::vector<OutputRecord> outputs;
  nlohmann::json details = nlohmann::json::object();
  double wallclock = 0.0;  // seconds; not part of reproducibility
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

inline std::string hash_args(const std::string& command, const std::vector<std::string>& args) {
  std::uint64_t h = io::fnv1a(command);
  for (const auto& a : args) {
    const std::uint8_t sep = 0;
    h = io::fnv1a({&sep, 1}, h);
    h = io::fnv1a(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(a.data()), a.size()), h);
  }
  return hex64(h);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// CSV text with the named header columns dropped from every row.
inline std::string strip_columns(const std::string& text, const std::vector<std::string>& drop) {
  std::stringstream in(text);
  std::string line, out;
  std::vector<bool> keep;
  bool header = true;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    if (header) {
      for (const auto& c : cells) keep.push_back(std::find(drop.begin(), drop.end(), c) == drop.end());
      header = false;
    }
    bool first = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i < keep.size() && !keep[i]) continue;
      if (!first) out += ',';
      out += cells[i];
      first = false;
    }
    out += '\n';
  }
  return out;
}

}  // namespace detail

inline std::string content_hash(const std::filesystem::path& file, const std::vector<std::string>& volatile_columns) {
  const auto bytes = io::read_file(file.string());
  if (volatile_columns.empty()) return hex64(io::fnv1a(bytes));
  return hex64(io::fnv1a(detail::strip_columns(std::string(bytes.begin(), bytes.end()), volatile_columns)));
}

inline OutputRecord record_output(const std::filesystem::path& dir, const std::string& name,
                                  std::vector<std::string> volatile_columns = {}) {
  return {name, content_hash(dir / name, volatile_columns), std::move(volatile_columns)};
}

inline nlohmann::json artifact_versions() {
  return {{"tool", kToolVersion},
          {"manifest", kManifestVersion},
          {"dataset_format", kDatasetVersion},
          {"checkpoint_format", kCheckpointVersion}};
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : m.outputs) {
    nlohmann::json j{{"path", o.path}, {"hash", o.hash}};
    if (!o.volatile_columns.empty()) j["volatile_columns"] = o.volatile_columns;
    outs.push_back(std::move(j));
  }
  nlohmann::json j{{"command", m.command},
                   {"args", m.args},
                   {"config_hash", m.config_hash},
                   {"inputs", m.inputs},
                   {"out_dir", m.out_dir},
                   {"outputs", outs},
                   {"versions", artifact_versions()},
                   {"details", m.details},
                   {"wallclock_seconds", m.wallclock}};
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.args = j.at("args").get<std::vector<std::string>>();
    m.config_hash = j.at("config_hash").get<std::string>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.out_dir = j.value("out_dir", std::string{});
    for (const auto& o : j.at("outputs"))
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("hash").get<std::string>(),
                           o.value("volatile_columns", std::vector<std::string>{})});
    m.details = j.value("details", nlohmann::json::object());
    m.wallclock = j.value("wallclock_seconds", 0.0);
    if (hash_args(m.command, m.args) != m.config_hash) throw FormatError("manifest config hash does not match its arguments");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << to_json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

/// Recompute every recorded output hash in `dir`. Returns an empty string on
/// success, otherwise the first mismatch.
inline std::string verify_outputs(const std::filesystem::path& dir, const RunManifest& m) {
  for (const auto& o : m.outputs) {
    if (!std::filesystem::exists(dir / o.path)) return "missing output " + o.path;
    if (content_hash(dir / o.path, o.volatile_columns) != o.hash) return "hash mismatch for " + o.path;
  }
  return {};
}

/// Compare two runs of the same command: arguments, seed and every output
/// hash must agree. Returns an empty string when they do.
inline std::string compare_runs(const RunManifest& a, const RunManifest& b) {
  if (a.command != b.command) return "commands differ";
  if (a.args != b.args) return "resolved arguments differ";
  if (a.config_hash != b.config_hash) return "config hashes differ";
  if (a.seed != b.seed) return "seeds differ";
  if (a.outputs.size() != b.outputs.size()) return "output counts differ";
  for (std::size_t i = 0; i < a.outputs.size(); ++i) {
    if (a.outputs[i].path != b.outputs[i].path) return "output names differ";
    if (a.outputs[i].hash != b.outputs[i].hash) return "output " + a.outputs[i].path + " differs";
  }
  if (a.details != b.details) return "run details differ";
  return {};
}

}  // namespace cvf::app
