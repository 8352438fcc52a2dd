#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "xsum/error.hpp"

namespace xsum {

/// Unsigned LEB128.
inline void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out += static_cast<char>((v & 0x7F) | 0x80);
    v >>= 7;
  }
  out += static_cast<char>(v);
}

inline void put_string(std::string& out, std::string_view s) {
  put_varint(out, s.size());
  out.append(s);
}

/// Bounds-checked reader over a byte buffer; overruns raise `on_short`.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data, ErrorCode on_short = ErrorCode::TruncatedInput)
      : data_(data), on_short_(on_short) {}

  std::uint8_t byte() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = byte();
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return v;
    }
    throw Error(on_short_, "varint longer than 64 bits", pos_);
  }

  std::uint32_t varint32() {
    const auto v = varint();
    if (v > UINT32_MAX) throw Error(on_short_, "value out of 32-bit range", pos_);
    return static_cast<std::uint32_t>(v);
  }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string string() { return std::string(bytes(varint())); }

  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw Error(on_short_, "input ends early", pos_);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  ErrorCode on_short_;
};

/// CRC-32 (IEEE) of a byte buffer.
std::uint32_t crc32_of(std::string_view data);

}  // namespace xsum
