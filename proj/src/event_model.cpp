#include "evtrace/event_model.hpp"

#include <array>
#include <utility>

#include "text_util.hpp"

namespace evtrace {

namespace {

constexpr std::array<std::pair<EventType, std::string_view>, kEventTypeCount> kNames{{
    {EventType::Action, "ACTION"},
    {EventType::KeyPressed, "KEY_PRESSED"},
    {EventType::KeyReleased, "KEY_RELEASED"},
    {EventType::KeyTyped, "KEY_TYPED"},
    {EventType::MouseMoved, "MOUSE_MOVED"},
    {EventType::MouseClicked, "MOUSE_CLICKED"},
    {EventType::Paint, "PAINT"},
    {EventType::FocusGained, "FOCUS_GAINED"},
    {EventType::FocusLost, "FOCUS_LOST"},
    {EventType::WindowOpened, "WINDOW_OPENED"},
    {EventType::WindowClosed, "WINDOW_CLOSED"},
    {EventType::Selection, "SELECTION"},
    {EventType::TextChanged, "TEXT_CHANGED"},
}};

constexpr std::array<EventType, kEventTypeCount> kAllTypes = [] {
  std::array<EventType, kEventTypeCount> out{};
  for (std::size_t i = 0; i < kNames.size(); ++i) out[i] = kNames[i].first;
  return out;
}();

static_assert([] {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (static_cast<std::size_t>(kNames[i].first) != i) return false;
  }
  return true;
}());

}  // namespace

std::string_view to_string(EventType type) noexcept {
  const auto index = static_cast<std::size_t>(type);
  return index < kNames.size() ? kNames[index].second : std::string_view{"?"};
}

std::span<const EventType> all_event_types() noexcept { return kAllTypes; }

std::optional<EventType> try_parse_event_type(std::string_view token) noexcept {
  for (const auto& [type, name] : kNames) {
    if (name == token) return type;
  }
  return std::nullopt;
}

EventType parse_event_type(std::string_view token) {
  if (auto type = try_parse_event_type(token)) return *type;
  throw ParseError("unknown event type '" + std::string(token) + "'");
}

std::vector<std::string> validate_message(const EventMessage& msg) {
  std::vector<std::string> violations;
  if (msg.source_class.empty()) {
    violations.emplace_back("source_class must be non-empty");
  }
  if (msg.index_in_parent < -1) {
    violations.emplace_back("index_in_parent must be >= -1");
  }
  if (msg.geometry.width < 1 || msg.geometry.height < 1) {
    violations.emplace_back("Geometry: width and height must be >= 1");
  }
  if (msg.screenshot) {
    const auto& shot = *msg.screenshot;
    if (shot.width < 1 || shot.height < 1) {
      violations.emplace_back("Screenshot: width and height must be >= 1");
    }
    const auto expected = std::uint64_t{shot.width} * shot.height * 4;
    if (shot.pixels.size() != expected) {
      violations.emplace_back("Screenshot: pixels length must equal width*height*4 (expected " +
                              std::to_string(expected) + ", got " +
                              std::to_string(shot.pixels.size()) + ")");
    }
  }
  return violations;
}

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::All ? "ALL" : "HANDLED";
}

Granularity parse_granularity(std::string_view token) {
  const auto upper = detail::to_upper(token);
  if (upper == "ALL") return Granularity::All;
  if (upper == "HANDLED") return Granularity::Handled;
  throw ParseError("unknown granularity '" + std::string(token) + "'");
}

InstrumentConfig make_config(Granularity granularity, std::span<const EventType> ignored_types,
                             bool capture_screenshots) {
  InstrumentConfig config;
  config.granularity = granularity;
  config.ignored_types.insert(ignored_types.begin(), ignored_types.end());
  config.capture_screenshots = capture_screenshots;
  return config;
}

InstrumentConfig make_config(Granularity granularity, std::span<const std::string> ignored_tokens,
                             bool capture_screenshots) {
  std::vector<EventType> types;
  types.reserve(ignored_tokens.size());
  for (const auto& token : ignored_tokens) types.push_back(parse_event_type(token));
  return make_config(granularity, types, capture_screenshots);
}

std::string format_config(const InstrumentConfig& config) {
  std::string out = "granularity=";
  out += to_string(config.granularity);
  out += "; ignore=";
  bool first = true;
  for (EventType type : config.ignored_types) {  // std::set<EventType> iterates in registry order
    if (!first) out += ',';
    out += to_string(type);
    first = false;
  }
  out += "; screenshots=";
  out += config.capture_screenshots ? "on" : "off";
  return out;
}

InstrumentConfig parse_config(std::string_view text) {
  InstrumentConfig config;
  bool seen_granularity = false;
  bool seen_ignore = false;
  bool seen_screenshots = false;

  for (auto field : detail::split(text, ';')) {
    field = detail::trim(field);
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config field '" + std::string(field) + "' lacks '='");
    }
    const auto key = detail::trim(field.substr(0, eq));
    const auto value = detail::trim(field.substr(eq + 1));

    if (key == "granularity") {
      if (std::exchange(seen_granularity, true)) throw ParseError("duplicate config key 'granularity'");
      config.granularity = parse_granularity(value);
    } else if (key == "ignore") {
      if (std::exchange(seen_ignore, true)) throw ParseError("duplicate config key 'ignore'");
      for (auto token : detail::split(value, ',')) {
        token = detail::trim(token);
        if (token.empty()) continue;
        config.ignored_types.insert(parse_event_type(token));
      }
    } else if (key == "screenshots") {
      if (std::exchange(seen_screenshots, true)) throw ParseError("duplicate config key 'screenshots'");
      if (value == "on") {
        config.capture_screenshots = true;
      } else if (value == "off") {
        config.capture_screenshots = false;
      } else {
        throw ParseError("screenshots must be 'on' or 'off', got '" + std::string(value) + "'");
      }
    } else {
      throw ParseError("unknown config key '" + std::string(key) + "'");
    }
  }
  return config;
}

}  // namespace evtrace
