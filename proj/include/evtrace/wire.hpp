#pragma once

// Binary framing between agent and host.
//
// Frame layout:
//   u32 payload length (big-endian) | u8 kind | payload
//
// Inside payloads integers are big-endian fixed width, strings are a u16
// big-endian byte length followed by UTF-8 bytes, and optional fields are
// preceded by a presence byte (0 or 1). See docs/wire-format.md.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "evtrace/event_model.hpp"

namespace evtrace::wire {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class FrameKind : std::uint8_t {
  Hello = 0x01,
  Config = 0x02,
  Event = 0x03,
  Bye = 0x04,
};

std::string_view to_string(FrameKind kind) noexcept;

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 5;
inline constexpr std::size_t kMaxPayloadSize = 0x7FFF'FFFF;  // 2^31 - 1
inline constexpr std::size_t kMaxStringSize = 0xFFFF;

struct Frame {
  FrameKind kind = FrameKind::Bye;
  Bytes payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct SessionHello {
  std::uint16_t protocol_version = kProtocolVersion;
  std::string agent_name;
  std::string toolkit_name;

  friend bool operator==(const SessionHello&, const SessionHello&) = default;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field-level decode failure. offset() is relative to the start of the
/// buffer handed to the decoding function.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Throws EncodeError when payload_size exceeds kMaxPayloadSize.
std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(FrameKind kind,
                                                               std::size_t payload_size);

Bytes encode_frame(const Frame& frame);
void append_frame(Bytes& out, FrameKind kind, ByteView payload);

struct Decoded {
  Frame frame;
  std::size_t consumed = 0;
};
struct NeedMore {};
struct Malformed {
  std::size_t offset = 0;  // first violating byte
  std::string reason;
};
using DecodeResult = std::variant<Decoded, NeedMore, Malformed>;

enum class PayloadCheck { Full, HeaderOnly };

/// Decodes the first frame in `bytes`. Never consumes a partial frame. With
/// PayloadCheck::Full the payload must also parse as its kind's message.
DecodeResult decode_frame(ByteView bytes, PayloadCheck check = PayloadCheck::Full);

Bytes encode_hello(const SessionHello& hello);
SessionHello decode_hello(ByteView payload);

Bytes encode_config(const InstrumentConfig& config);
InstrumentConfig decode_config(ByteView payload);

/// Refuses (EncodeError) messages for which validate_message is non-empty.
/// Timers are written name-sorted, listeners in list order.
Bytes encode_event(const EventMessage& msg);
EventMessage decode_event(ByteView payload);

/// Appends a complete EVENT frame for msg to out. Equivalent to
/// append_frame(out, FrameKind::Event, encode_event(msg)) without the
/// intermediate buffer.
void append_event_frame(Bytes& out, const EventMessage& msg);

Frame make_frame(const SessionHello& hello);
Frame make_frame(const InstrumentConfig& config);
Frame make_frame(const EventMessage& msg);
Frame make_bye_frame();

/// Incremental decoder over a byte stream that may arrive in arbitrary
/// chunks. Malformed offsets are absolute stream positions. Once a Malformed
/// result is produced the decoder stays in that state.
class StreamDecoder {
 public:
  explicit StreamDecoder(PayloadCheck check = PayloadCheck::Full) : check_(check) {}

  void feed(ByteView chunk);
  DecodeResult next();

  std::size_t buffered() const noexcept { return buffer_.size() - read_pos_; }
  std::size_t stream_offset() const noexcept { return consumed_total_; }

 private:
  PayloadCheck check_;
  Bytes buffer_;
  std::size_t read_pos_ = 0;
  std::size_t consumed_total_ = 0;
  std::optional<Malformed> failure_;
};

}  // namespace evtrace::wire
