#pragma once

#include <cstdint>

namespace evtrace {

/// Per-event time spent inside the agent. Invariant:
/// t_capture_ns + t_send_ns <= t_total_ns.
struct OverheadSample {
  std::uint64_t event_id = 0;
  std::uint64_t t_total_ns = 0;
  std::uint64_t t_capture_ns = 0;  // 0 when no screenshot was taken
  std::uint64_t t_send_ns = 0;     // serialization + socket write

  friend bool operator==(const OverheadSample&, const OverheadSample&) = default;
};

}  // namespace evtrace
