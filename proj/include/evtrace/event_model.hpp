#pragma once

// Toolkit-independent event representation shared by the agent and the host.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evtrace {

/// Closed registry of traceable event types. Extend here (and in the name
/// table in event_model.cpp) to make a new type traceable.
enum class EventType : std::uint8_t {
  Action,
  KeyPressed,
  KeyReleased,
  KeyTyped,
  MouseMoved,
  MouseClicked,
  Paint,
  FocusGained,
  FocusLost,
  WindowOpened,
  WindowClosed,
  Selection,
  TextChanged,
};

inline constexpr std::size_t kEventTypeCount = 13;

std::string_view to_string(EventType type) noexcept;

/// Every registered type, in registry order.
std::span<const EventType> all_event_types() noexcept;

/// Thrown for any malformed textual input (event type tokens, config strings,
/// fixture files). The message names the offending token.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accepts exactly the registry names (e.g. "KEY_PRESSED").
EventType parse_event_type(std::string_view token);
std::optional<EventType> try_parse_event_type(std::string_view token) noexcept;

struct HandlerRef {
  std::string handler_id;
  std::uint32_t registration_order = 0;

  friend bool operator==(const HandlerRef&, const HandlerRef&) = default;
};

struct Geometry {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t width = 1;
  std::int32_t height = 1;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// Uncompressed RGBA8, row-major. pixels.size() == width * height * 4.
struct Screenshot {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Screenshot&, const Screenshot&) = default;
};

/// Well-known timer names recorded by the agent.
namespace timers {
inline constexpr std::string_view kTotal = "t_total";
inline constexpr std::string_view kCapture = "t_capture";
inline constexpr std::string_view kSend = "t_send";
}  // namespace timers

struct EventMessage {
  std::uint64_t id = 0;
  std::string source_class;
  std::int32_t index_in_parent = -1;  // -1 for root windows
  Geometry geometry;
  std::optional<Screenshot> screenshot;
  EventType event_type = EventType::Action;
  std::map<std::string, std::uint64_t, std::less<>> timers;  // nanoseconds
  std::vector<HandlerRef> listeners;

  friend bool operator==(const EventMessage&, const EventMessage&) = default;
};

/// Returns every violated invariant as a human-readable rule description.
/// An empty result means the message is valid.
std::vector<std::string> validate_message(const EventMessage& msg);

enum class Granularity : std::uint8_t { All, Handled };

std::string_view to_string(Granularity g) noexcept;
Granularity parse_granularity(std::string_view token);

struct InstrumentConfig {
  Granularity granularity = Granularity::All;
  std::set<EventType> ignored_types;
  bool capture_screenshots = false;

  friend bool operator==(const InstrumentConfig&, const InstrumentConfig&) = default;
};

InstrumentConfig make_config(Granularity granularity,
                             std::span<const EventType> ignored_types,
                             bool capture_screenshots);

/// Same as above, with ignored types given as registry tokens. Unknown tokens
/// are rejected with a ParseError naming the token.
InstrumentConfig make_config(Granularity granularity,
                             std::span<const std::string> ignored_tokens,
                             bool capture_screenshots);

/// Type filter first, then granularity.
inline bool passes_filters(const InstrumentConfig& config, EventType type,
                           std::size_t listener_count) noexcept {
  if (config.ignored_types.contains(type)) {
    return false;
  }
  return config.granularity == Granularity::All || listener_count >= 1;
}

/// `granularity=ALL|HANDLED; ignore=TYPE,TYPE,...; screenshots=on|off`
/// Ignored types are emitted in registry order so the form is canonical.
std::string format_config(const InstrumentConfig& config);
InstrumentConfig parse_config(std::string_view text);

}  // namespace evtrace
