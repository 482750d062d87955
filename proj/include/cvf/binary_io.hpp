#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "cvf/error.hpp"

namespace cvf::io {

/// FNV-1a over a byte range.
inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Little-endian byte sink.
class ByteWriter {
 public:
  void magic(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  /// Append the FNV-1a of everything written so far.
  void seal() { u64(fnv1a(bytes_)); }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

  void save(const std::string& path) const { write_file(path, bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes_;
};

/// Little-endian byte source with bounds checking.
class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes, std::string what = "file")
      : bytes_(std::move(bytes)), what_(std::move(what)) {}

  static ByteReader load(const std::string& path) { return ByteReader(read_file(path), path); }

  void expect_magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0)
      throw FormatError(what_ + ": bad magic, expected '" + std::string(tag, 4) + "'");
    pos_ += 4;
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }

  std::vector<double> f64s(std::size_t n) {
    need_elements(n, 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  /// Verify the trailing checksum written by ByteWriter::seal.
  void check_seal() {
    const std::size_t body = pos_;
    const std::uint64_t expect = fnv1a({bytes_.data(), body});
    if (u64() != expect) throw FormatError(what_ + ": checksum mismatch (corrupted file)");
    if (pos_ != bytes_.size()) throw FormatError(what_ + ": trailing bytes after checksum");
  }

  /// Guard element counts read from headers before allocating.
  void need_elements(std::uint64_t n, std::uint64_t width) const {
    if (width != 0 && n > (bytes_.size() - pos_) / width) throw FormatError(what_ + ": truncated file");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(what_ + ": truncated file");
  }

  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::vector<std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace cvf::io
