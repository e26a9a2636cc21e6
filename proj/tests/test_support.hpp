#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "evtrace/event_model.hpp"
#include "evtrace/wire.hpp"

namespace evtrace::testing {

inline std::string random_string(std::mt19937_64& rng, std::size_t max_len, bool non_empty = false) {
  static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._$";
  std::uniform_int_distribution<std::size_t> len(non_empty ? 1 : 0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

inline EventType random_type(std::mt19937_64& rng) {
  const auto types = all_event_types();
  return types[std::uniform_int_distribution<std::size_t>(0, types.size() - 1)(rng)];
}

/// A message satisfying validate_message.
inline EventMessage random_message(std::mt19937_64& rng) {
  EventMessage m;
  m.id = rng();
  m.source_class = random_string(rng, 40, true);
  m.index_in_parent = std::uniform_int_distribution<std::int32_t>(-1, 1 << 20)(rng);
  std::uniform_int_distribution<std::int32_t> coord(-100000, 100000);
  std::uniform_int_distribution<std::int32_t> size(1, 100000);
  m.geometry = {coord(rng), coord(rng), size(rng), size(rng)};
  if (rng() % 4 == 0) {
    Screenshot shot;
    shot.width = std::uniform_int_distribution<std::uint32_t>(1, 9)(rng);
    shot.height = std::uniform_int_distribution<std::uint32_t>(1, 9)(rng);
    shot.pixels.resize(std::size_t{shot.width} * shot.height * 4);
    for (auto& p : shot.pixels) p = static_cast<std::uint8_t>(rng());
    m.screenshot = std::move(shot);
  }
  m.event_type = random_type(rng);
  const auto timers = rng() % 5;
  for (std::uint64_t i = 0; i < timers; ++i) m.timers[random_string(rng, 12, true)] = rng();
  const auto listeners = rng() % 4;
  for (std::uint64_t i = 0; i < listeners; ++i) {
    m.listeners.push_back({random_string(rng, 24), static_cast<std::uint32_t>(rng())});
  }
  return m;
}

inline InstrumentConfig random_config(std::mt19937_64& rng) {
  InstrumentConfig c;
  c.granularity = rng() % 2 ? Granularity::All : Granularity::Handled;
  for (auto t : all_event_types()) {
    if (rng() % 4 == 0) c.ignored_types.insert(t);
  }
  c.capture_screenshots = rng() % 2;
  return c;
}

inline wire::Bytes from_hex(std::string_view hex) {
  wire::Bytes out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(std::string(hex.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

}  // namespace evtrace::testing
