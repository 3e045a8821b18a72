#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace planopt::io {

/// Raised on any structural problem with an on-disk artifact: bad magic,
/// version mismatch, truncation, or checksum failure.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint32_t crc32_ieee(std::span<const uint8_t> data);

/// Little-endian byte buffer builder with a trailing-CRC convention.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f64(double v);
  void magic(std::string_view m);  // raw bytes, no length prefix
  void str(std::string_view s);    // u32 length + bytes
  void raw(std::span<const uint8_t> bytes);

  /// Append CRC32 of everything written so far.
  void finish_with_crc();

  uint32_t crc() const { return crc32_ieee(buf_); }
  const std::vector<uint8_t>& buffer() const { return buf_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<uint8_t> buf_;
};

/// Checked little-endian reader. All reads throw FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::vector<uint8_t> bytes) : buf_(std::move(bytes)) {}
  static ByteReader from_file(const std::filesystem::path& path);

  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  double f64();
  std::string str();

  /// Consume and compare a fixed magic string.
  void expect_magic(std::string_view m);

  /// Check that the final 4 bytes are the CRC32 of everything before them.
  /// Call before parsing; subsequent reads stop short of the checksum.
  void verify_trailing_crc();

  size_t remaining() const { return limit() - pos_; }
  bool at_end() const { return pos_ >= limit(); }

 private:
  size_t limit() const { return crc_checked_ ? buf_.size() - 4 : buf_.size(); }
  void need(size_t n);

  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
  bool crc_checked_ = false;
};

}  // namespace planopt::io
