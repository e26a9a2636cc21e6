#include "evtrace/wire.hpp"

#include <optional>

#include "byte_io.hpp"

namespace evtrace::wire {

using detail::ByteReader;
using detail::ByteWriter;

std::string_view to_string(FrameKind kind) noexcept {
  switch (kind) {
    case FrameKind::Hello: return "HELLO";
    case FrameKind::Config: return "CONFIG";
    case FrameKind::Event: return "EVENT";
    case FrameKind::Bye: return "BYE";
  }
  return "?";
}

namespace {

bool known_kind(std::uint8_t byte) noexcept { return byte >= 0x01 && byte <= 0x04; }

std::uint32_t read_length(ByteView bytes) noexcept {
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

void check_payload(FrameKind kind, ByteView payload) {
  switch (kind) {
    case FrameKind::Hello: (void)decode_hello(payload); break;
    case FrameKind::Config: (void)decode_config(payload); break;
    case FrameKind::Event: (void)decode_event(payload); break;
    case FrameKind::Bye:
      if (!payload.empty()) throw DecodeError(0, "BYE frame carries a payload");
      break;
  }
}

void write_event_payload(ByteWriter& w, const EventMessage& msg) {
  if (auto violations = validate_message(msg); !violations.empty()) {
    std::string what = "refusing to encode invalid EventMessage:";
    for (const auto& v : violations) what += " [" + v + "]";
    throw EncodeError(what);
  }
  w.u64(msg.id);
  w.str(msg.source_class);
  w.i32(msg.index_in_parent);
  w.i32(msg.geometry.x);
  w.i32(msg.geometry.y);
  w.i32(msg.geometry.width);
  w.i32(msg.geometry.height);
  if (msg.screenshot) {
    w.u8(1);
    w.u32(msg.screenshot->width);
    w.u32(msg.screenshot->height);
    w.raw(msg.screenshot->pixels.data(), msg.screenshot->pixels.size());
  } else {
    w.u8(0);
  }
  w.str(to_string(msg.event_type));
  if (msg.timers.size() > 0xFFFF) throw EncodeError("more than 65535 timers");
  w.u16(static_cast<std::uint16_t>(msg.timers.size()));
  for (const auto& [name, value] : msg.timers) {  // std::map: already name-sorted
    w.str(name);
    w.u64(value);
  }
  if (msg.listeners.size() > 0xFFFF'FFFFu) throw EncodeError("too many listeners");
  w.u32(static_cast<std::uint32_t>(msg.listeners.size()));
  for (const auto& handler : msg.listeners) {
    w.str(handler.handler_id);
    w.u32(handler.registration_order);
  }
}

}  // namespace

std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(FrameKind kind,
                                                               std::size_t payload_size) {
  if (payload_size > kMaxPayloadSize) {
    throw EncodeError("payload of " + std::to_string(payload_size) +
                      " bytes exceeds the frame limit of " + std::to_string(kMaxPayloadSize) +
                      " bytes");
  }
  const auto n = static_cast<std::uint32_t>(payload_size);
  return {static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
          static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n),
          static_cast<std::uint8_t>(kind)};
}

void append_frame(Bytes& out, FrameKind kind, ByteView payload) {
  const auto header = encode_frame_header(kind, payload.size());
  out.reserve(out.size() + header.size() + payload.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
}

Bytes encode_frame(const Frame& frame) {
  Bytes out;
  append_frame(out, frame.kind, frame.payload);
  return out;
}

DecodeResult decode_frame(ByteView bytes, PayloadCheck check) {
  if (bytes.size() < kFrameHeaderSize) return NeedMore{};
  const std::uint32_t length = read_length(bytes);
  if (length > kMaxPayloadSize) {
    return Malformed{0, "declared payload length " + std::to_string(length) + " exceeds limit"};
  }
  const std::uint8_t kind_byte = bytes[4];
  if (!known_kind(kind_byte)) {
    return Malformed{4, "unknown frame kind 0x" + [&] {
                          constexpr char hex[] = "0123456789ABCDEF";
                          return std::string{hex[kind_byte >> 4], hex[kind_byte & 0xF]};
                        }()};
  }
  if (bytes.size() - kFrameHeaderSize < length) return NeedMore{};

  const auto kind = static_cast<FrameKind>(kind_byte);
  const auto payload = bytes.subspan(kFrameHeaderSize, length);
  if (check == PayloadCheck::Full) {
    try {
      check_payload(kind, payload);
    } catch (const DecodeError& e) {
      return Malformed{kFrameHeaderSize + e.offset(), e.what()};
    }
  }
  return Decoded{Frame{kind, Bytes(payload.begin(), payload.end())}, kFrameHeaderSize + length};
}

Bytes encode_hello(const SessionHello& hello) {
  Bytes out;
  ByteWriter w(out);
  w.u16(hello.protocol_version);
  w.str(hello.agent_name);
  w.str(hello.toolkit_name);
  return out;
}

SessionHello decode_hello(ByteView payload) {
  ByteReader r(payload);
  SessionHello hello;
  hello.protocol_version = r.u16();
  hello.agent_name = r.str();
  hello.toolkit_name = r.str();
  r.expect_end("HELLO");
  return hello;
}

Bytes encode_config(const InstrumentConfig& config) {
  Bytes out;
  ByteWriter w(out);
  w.u8(config.granularity == Granularity::All ? 0 : 1);
  w.u16(static_cast<std::uint16_t>(config.ignored_types.size()));
  for (EventType type : config.ignored_types) w.str(to_string(type));
  w.u8(config.capture_screenshots ? 1 : 0);
  return out;
}

InstrumentConfig decode_config(ByteView payload) {
  ByteReader r(payload);
  InstrumentConfig config;
  const auto granularity_at = r.pos();
  switch (r.u8()) {
    case 0: config.granularity = Granularity::All; break;
    case 1: config.granularity = Granularity::Handled; break;
    default: throw DecodeError(granularity_at, "invalid granularity byte");
  }
  const std::size_t count = r.u16();
  std::optional<EventType> previous;
  for (std::size_t i = 0; i < count; ++i) {
    const auto at = r.pos();
    const auto name = r.str();
    const auto type = try_parse_event_type(name);
    if (!type) throw DecodeError(at, "unknown event type '" + name + "'");
    if (previous && *type <= *previous) {
      throw DecodeError(at, "ignored types not in strictly increasing registry order");
    }
    previous = type;
    config.ignored_types.insert(*type);
  }
  const auto flag_at = r.pos();
  const auto flag = r.u8();
  if (flag > 1) throw DecodeError(flag_at, "invalid screenshots flag");
  config.capture_screenshots = flag == 1;
  r.expect_end("CONFIG");
  return config;
}

Bytes encode_event(const EventMessage& msg) {
  Bytes out;
  ByteWriter w(out);
  write_event_payload(w, msg);
  return out;
}

void append_event_frame(Bytes& out, const EventMessage& msg) {
  const auto start = out.size();
  out.resize(start + kFrameHeaderSize);
  ByteWriter w(out);
  write_event_payload(w, msg);
  const auto header = encode_frame_header(FrameKind::Event, out.size() - start - kFrameHeaderSize);
  std::copy(header.begin(), header.end(), out.begin() + static_cast<std::ptrdiff_t>(start));
}

EventMessage decode_event(ByteView payload) {
  ByteReader r(payload);
  EventMessage msg;
  msg.id = r.u64();

  auto at = r.pos();
  msg.source_class = r.str();
  if (msg.source_class.empty()) throw DecodeError(at, "empty source_class");

  at = r.pos();
  msg.index_in_parent = r.i32();
  if (msg.index_in_parent < -1) throw DecodeError(at, "index_in_parent below -1");

  msg.geometry.x = r.i32();
  msg.geometry.y = r.i32();
  at = r.pos();
  msg.geometry.width = r.i32();
  msg.geometry.height = r.i32();
  if (msg.geometry.width < 1 || msg.geometry.height < 1) {
    throw DecodeError(at, "non-positive geometry size");
  }

  at = r.pos();
  switch (r.u8()) {
    case 0: break;
    case 1: {
      Screenshot shot;
      at = r.pos();
      shot.width = r.u32();
      shot.height = r.u32();
      if (shot.width < 1 || shot.height < 1) throw DecodeError(at, "empty screenshot");
      const std::uint64_t n = std::uint64_t{shot.width} * shot.height * 4;
      if (n > r.remaining()) throw DecodeError(r.pos(), "screenshot pixels overrun payload");
      const auto pixels = r.raw(static_cast<std::size_t>(n));
      shot.pixels.assign(pixels.begin(), pixels.end());
      msg.screenshot = std::move(shot);
      break;
    }
    default: throw DecodeError(at, "invalid screenshot presence flag");
  }

  at = r.pos();
  const auto type_name = r.str();
  const auto type = try_parse_event_type(type_name);
  if (!type) throw DecodeError(at, "unknown event type '" + type_name + "'");
  msg.event_type = *type;

  const std::size_t timer_count = r.u16();
  for (std::size_t i = 0; i < timer_count; ++i) {
    at = r.pos();
    auto name = r.str();
    const auto value = r.u64();
    if (!msg.timers.empty() && !(msg.timers.rbegin()->first < name)) {
      throw DecodeError(at, "timers not strictly name-sorted");
    }
    msg.timers.emplace_hint(msg.timers.end(), std::move(name), value);
  }

  const std::size_t listener_count = r.u32();
  if (listener_count > r.remaining() / 6) {  // each entry is at least 6 bytes
    throw DecodeError(r.pos() - 4, "listener count overruns payload");
  }
  msg.listeners.reserve(listener_count);
  for (std::size_t i = 0; i < listener_count; ++i) {
    HandlerRef handler;
    handler.handler_id = r.str();
    handler.registration_order = r.u32();
    msg.listeners.push_back(std::move(handler));
  }
  r.expect_end("EVENT");
  return msg;
}

Frame make_frame(const SessionHello& hello) { return {FrameKind::Hello, encode_hello(hello)}; }
Frame make_frame(const InstrumentConfig& config) { return {FrameKind::Config, encode_config(config)}; }
Frame make_frame(const EventMessage& msg) { return {FrameKind::Event, encode_event(msg)}; }
Frame make_bye_frame() { return {FrameKind::Bye, {}}; }

void StreamDecoder::feed(ByteView chunk) {
  if (read_pos_ > 0 && read_pos_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(read_pos_));
    read_pos_ = 0;
  }
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

DecodeResult StreamDecoder::next() {
  if (failure_) return *failure_;
  auto result = decode_frame(ByteView(buffer_).subspan(read_pos_), check_);
  if (auto* decoded = std::get_if<Decoded>(&result)) {
    read_pos_ += decoded->consumed;
    consumed_total_ += decoded->consumed;
  } else if (auto* bad = std::get_if<Malformed>(&result)) {
    bad->offset += consumed_total_;
    failure_ = *bad;
  }
  return result;
}

}  // namespace evtrace::wire
