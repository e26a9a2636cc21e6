#pragma once

// Persistent trace format (.evtr):
//
//   header  "EVTR" | u16 format version | str scenario name | str canonical config
//   body    EVENT frames, exactly as sent on the wire
//   footer  BYE frame (00 00 00 00 04) | u64 event count | u64 sample count |
//           samples (u64 id, u64 t_total, u64 t_capture, u64 t_send)
//
// All integers big-endian, strings u16-length-prefixed. See docs/trace-format.md.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtrace/event_model.hpp"
#include "evtrace/overhead_sample.hpp"

namespace evtrace {

inline constexpr std::array<char, 4> kTraceMagic{'E', 'V', 'T', 'R'};
inline constexpr std::uint16_t kTraceFormatVersion = 1;

struct TraceRecord {
  std::string scenario_name;
  InstrumentConfig config;
  std::vector<EventMessage> events;
  std::vector<OverheadSample> samples;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class TraceFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Streaming writer: header on construction, one frame per append, footer on
/// finish. Stops writing (and reports failed()) as soon as the stream fails.
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const std::string& scenario_name, const InstrumentConfig& config);

  void append(const EventMessage& msg);
  void finish(std::span<const OverheadSample> samples);

  bool failed() const noexcept { return failed_; }
  bool finished() const noexcept { return finished_; }
  std::uint64_t event_count() const noexcept { return count_; }

 private:
  void write(std::span<const std::uint8_t> bytes);

  std::ostream& out_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t count_ = 0;
  bool failed_ = false;
  bool finished_ = false;
};

void write_trace(std::ostream& out, const TraceRecord& record);
TraceRecord read_trace(std::istream& in);

void save_trace(const std::filesystem::path& path, const TraceRecord& record);
TraceRecord load_trace(const std::filesystem::path& path);

}  // namespace evtrace
