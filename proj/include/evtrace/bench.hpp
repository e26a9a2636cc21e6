#pragma once

// Benchmark harness: runs scenarios through a loopback agent/host pair and
// summarizes per-event overhead.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evtrace/agent.hpp"
#include "evtrace/dispatch_core.hpp"
#include "evtrace/event_model.hpp"
#include "evtrace/overhead_sample.hpp"
#include "evtrace/scenario.hpp"
#include "evtrace/trace_file.hpp"
#include "evtrace/transport.hpp"

namespace evtrace::bench {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// --- Running ---------------------------------------------------------------------

struct RunOptions {
  /// Address the agent listens on; the in-process host connects to it.
  net::Endpoint endpoint{"127.0.0.1", 0};
  /// Keep screenshot pixels in the returned trace. Off by default: a
  /// screenshots-on run of a large scenario carries gigabytes of pixels.
  bool retain_screenshots = false;
  /// Keep the dispatch core's DispatchRecord log in the result.
  bool keep_dispatch_log = true;
  /// Agent timer clock. Defaults to the replay thread's CPU time so that host
  /// work sharing a core is not charged to the agent.
  const MonotonicClock* clock = &thread_cpu_clock();
};

struct RunResult {
  TraceRecord trace;
  std::vector<DispatchRecord> dispatch_log;
  std::uint64_t fired = 0;
  std::uint64_t filtered = 0;
};

/// Builds the scenario on a fresh core, connects a host over TCP, installs
/// the agent and replays the script on the calling thread. Throws RunError
/// if the agent or host fails.
RunResult run_scenario(const Scenario& scenario, const InstrumentConfig& config,
                       const RunOptions& options = {});

// --- Statistics ------------------------------------------------------------------

struct OutlierRule {
  double sigma = 3.0;
  bool enabled = true;
};

struct OverheadStats {
  std::uint64_t n = 0;
  std::uint64_t n_outliers_removed = 0;
  double mean_ns = 0;
  double stddev_ns = 0;
  std::uint64_t min_ns = 0;
  std::uint64_t max_ns = 0;

  double cv() const noexcept { return mean_ns > 0 ? stddev_ns / mean_ns : 0.0; }
};

/// Indices of values further than rule.sigma sample standard deviations from
/// the mean, both computed once over all values. Empty if the rule is
/// disabled or there are fewer than two values.
std::vector<std::size_t> flag_outliers(std::span<const std::uint64_t> values, const OutlierRule& rule);

/// Mean and sample standard deviation (n-1 denominator) of the values left
/// after outlier removal. Throws StatsError on empty input or when the rule
/// removes every value.
OverheadStats overhead_stats(std::span<const std::uint64_t> values, const OutlierRule& rule = {});

/// Statistics over t_total.
OverheadStats overhead_stats(std::span<const OverheadSample> samples, const OutlierRule& rule = {});

struct HistogramReport {
  double center_ns = 0;
  double bin_width_ns = 0;
  /// floor((t_total - center) / bin_width) -> count
  std::map<std::int64_t, std::uint64_t> bins;
  std::uint64_t no_screenshot = 0;
  std::uint64_t n = 0;

  /// The most populated sigma bin (lowest offset on ties); nullopt if empty.
  std::optional<std::int64_t> modal_bin() const;
};

/// Bins every sample. With screenshots_on, samples whose t_capture is 0 go
/// to the NO_SCREENSHOT bin. A zero stddev puts everything in bin 0.
HistogramReport histogram(std::span<const OverheadSample> samples, const OverheadStats& stats,
                          bool screenshots_on);

// --- Comparison ------------------------------------------------------------------

struct Divergence {
  std::size_t position = 0;
  std::string expected;
  std::string actual;
};

struct FlakinessReport {
  bool equal = true;
  std::optional<Divergence> first_divergence;
};

/// "<source_class>[<index>] <TYPE>"
std::string summarize(const EventMessage& msg);

/// Compares (source_class, index_in_parent, event_type) position by
/// position; a length mismatch diverges at the shorter length.
FlakinessReport compare_traces(const TraceRecord& expected, const TraceRecord& actual);

// --- Reporting -------------------------------------------------------------------

struct RunSummary {
  std::string scenario;
  Granularity granularity = Granularity::All;
  bool screenshots = false;
  OverheadStats stats;
};

/// Nanoseconds as milliseconds with two decimals.
std::string format_ms(double ns);

/// Grid per screenshot setting (rows = scenarios in first-seen order,
/// columns = ALL/HANDLED), followed by one key=value line per cell field.
std::string table_report(std::span<const RunSummary> runs);

// --- Rendering cost --------------------------------------------------------------

/// Median render time (ns) of a single square window for each side length.
std::vector<std::uint64_t> render_medians(std::span<const int> sides, int trials);

}  // namespace evtrace::bench
