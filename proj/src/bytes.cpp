#include "planopt/bytes.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace planopt::io {

uint32_t crc32_ieee(std::span<const uint8_t> data) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt chunks; files here are far below 4 GiB but stay safe.
  size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<size_t>(data.size() - off, 1u << 30));
    c = ::crc32(c, data.data() + off, chunk);
    off += chunk;
  }
  return static_cast<uint32_t>(c);
}

void ByteWriter::u16(uint16_t v) {
  buf_.push_back(static_cast<uint8_t>(v));
  buf_.push_back(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  u64(bits);
}

void ByteWriter::magic(std::string_view m) {
  buf_.insert(buf_.end(), m.begin(), m.end());
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::raw(std::span<const uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::finish_with_crc() { u32(crc()); }

void ByteWriter::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf_.data()),
            static_cast<std::streamsize>(buf_.size()));
  if (!out) throw FormatError("short write: " + path.string());
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ByteReader(std::move(bytes));
}

void ByteReader::need(size_t n) {
  if (pos_ + n > limit()) throw FormatError("truncated file");
}

uint8_t ByteReader::u8() {
  need(1);
  return buf_[pos_++];
}

uint16_t ByteReader::u16() {
  need(2);
  uint16_t v = static_cast<uint16_t>(buf_[pos_]) |
               static_cast<uint16_t>(buf_[pos_ + 1]) << 8;
  pos_ += 2;
  return v;
}

uint32_t ByteReader::u32() {
  need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::u64() {
  need(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() {
  const uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::string ByteReader::str() {
  const uint32_t n = u32();
  need(n);
  std::string s(buf_.begin() + static_cast<ptrdiff_t>(pos_),
                buf_.begin() + static_cast<ptrdiff_t>(pos_ + n));
  pos_ += n;
  return s;
}

void ByteReader::expect_magic(std::string_view m) {
  need(m.size());
  if (std::string_view(reinterpret_cast<const char*>(buf_.data() + pos_), m.size()) != m) {
    // Distinguish a wrong format version from a wrong file kind when the
    // magic shares a prefix (e.g. "POPSET2" vs "POPSET1").
    const std::string_view prefix = m.substr(0, m.size() - 1);
    if (buf_.size() >= pos_ + m.size() &&
        std::string_view(reinterpret_cast<const char*>(buf_.data() + pos_), prefix.size()) ==
            prefix) {
      throw FormatError("version mismatch: expected magic '" + std::string(m) + "'");
    }
    throw FormatError("bad magic: expected '" + std::string(m) + "'");
  }
  pos_ += m.size();
}

void ByteReader::verify_trailing_crc() {
  if (buf_.size() < 4) throw FormatError("truncated file");
  const std::span<const uint8_t> body(buf_.data(), buf_.size() - 4);
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) {
    stored |= static_cast<uint32_t>(buf_[buf_.size() - 4 + static_cast<size_t>(i)]) << (8 * i);
  }
  if (crc32_ieee(body) != stored) throw FormatError("checksum failure");
  crc_checked_ = true;
}

}  // namespace planopt::io
