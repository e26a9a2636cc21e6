#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "evtrace/wire.hpp"

namespace evtrace::wire::detail {

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }

  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }

  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  void str(std::string_view s) {
    if (s.size() > kMaxStringSize) {
      throw EncodeError("string of " + std::to_string(s.size()) + " bytes exceeds the " +
                        std::to_string(kMaxStringSize) + "-byte limit");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s.data(), s.size());
  }

  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

  std::size_t size() const noexcept { return out_.size(); }

 private:
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() {
    need(1, "u8");
    return in_[pos_++];
  }

  std::uint16_t u16() {
    need(2, "u16");
    std::uint16_t v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += 8;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

  std::string str() {
    const auto at = pos_;
    const std::size_t n = u16();
    if (remaining() < n) {
      throw DecodeError(at, "string length " + std::to_string(n) + " overruns payload");
    }
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  ByteView raw(std::size_t n) {
    need(n, "byte block");
    auto view = in_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void expect_end(const char* what) const {
    if (pos_ != in_.size()) {
      throw DecodeError(pos_, std::string("trailing bytes after ") + what);
    }
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw DecodeError(pos_, std::string("truncated ") + what);
    }
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace evtrace::wire::detail
