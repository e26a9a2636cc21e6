#include "evtrace/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "evtrace/agent.hpp"
#include "evtrace/host.hpp"

namespace evtrace::bench {

// --- Running ---------------------------------------------------------------------

RunResult run_scenario(const Scenario& scenario, const InstrumentConfig& config,
                       const RunOptions& options) {
  DispatchOptions dispatch_options;
  dispatch_options.keep_log = options.keep_dispatch_log;
  auto core = build_core(scenario, dispatch_options);

  auto listener = net::TcpListener::bind(options.endpoint);
  const auto endpoint = listener.local_endpoint();

  RunResult result;
  result.trace.scenario_name = scenario.name;
  result.trace.config = config;

  host::InstrService service;
  auto connector = service.configure(config);
  connector->add_event_message_listener([&, retain = options.retain_screenshots](const EventMessage& msg) {
    if (retain || !msg.screenshot) {
      result.trace.events.push_back(msg);
      return;
    }
    auto& stored = result.trace.events.emplace_back();
    stored.id = msg.id;
    stored.source_class = msg.source_class;
    stored.index_in_parent = msg.index_in_parent;
    stored.geometry = msg.geometry;
    stored.event_type = msg.event_type;
    stored.timers = msg.timers;
    stored.listeners = msg.listeners;
  });

  std::exception_ptr connect_error;
  std::thread host_thread([&] {
    try {
      connector->connect(endpoint);
    } catch (...) {
      connect_error = std::current_exception();
    }
  });

  AgentTransport transport;
  try {
    transport = AgentTransport::accept_host(listener);
  } catch (...) {
    host_thread.join();
    if (connect_error) std::rethrow_exception(connect_error);
    throw;
  }
  host_thread.join();
  listener.close();
  if (connect_error) {
    try {
      std::rethrow_exception(connect_error);
    } catch (const std::exception& e) {
      throw RunError(std::string("host failed to connect: ") + e.what());
    }
  }

  auto session = install_agent(*core, std::move(transport), *options.clock);
  run_actions(scenario, *core);
  session->close();

  const auto final_state = connector->wait();
  if (session->state() == SessionState::Failed) {
    throw RunError("agent failed: " + session->failure().value_or("unknown"));
  }
  if (final_state != host::ConnectorState::Closed) {
    throw RunError("host ended in state " + std::string(host::to_string(final_state)) + ": " +
                   connector->failure_reason());
  }

  result.trace.samples = session->drain_samples();
  result.fired = core->fired_count();
  result.filtered = session->filtered();
  const auto log = core->log();
  result.dispatch_log.assign(log.begin(), log.end());
  return result;
}

// --- Statistics ------------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0;
  double stddev = 0;
};

Moments two_pass(std::span<const std::uint64_t> values, const std::vector<bool>* skip = nullptr) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (skip && (*skip)[i]) continue;
    sum += static_cast<double>(values[i]);
    ++n;
  }
  Moments m;
  if (n == 0) return m;
  m.mean = sum / static_cast<double>(n);
  if (n < 2) return m;
  double squares = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (skip && (*skip)[i]) continue;
    const double d = static_cast<double>(values[i]) - m.mean;
    squares += d * d;
  }
  m.stddev = std::sqrt(squares / static_cast<double>(n - 1));
  return m;
}

}  // namespace

std::vector<std::size_t> flag_outliers(std::span<const std::uint64_t> values, const OutlierRule& rule) {
  std::vector<std::size_t> flagged;
  if (!rule.enabled || values.size() < 2) return flagged;
  const auto m = two_pass(values);
  const double limit = rule.sigma * m.stddev;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(static_cast<double>(values[i]) - m.mean) > limit) flagged.push_back(i);
  }
  return flagged;
}

OverheadStats overhead_stats(std::span<const std::uint64_t> values, const OutlierRule& rule) {
  if (values.empty()) throw StatsError("overhead_stats: no samples");
  std::vector<bool> removed(values.size(), false);
  const auto flagged = flag_outliers(values, rule);
  for (auto i : flagged) removed[i] = true;
  if (flagged.size() == values.size()) {
    throw StatsError("overhead_stats: outlier rule removed all " + std::to_string(values.size()) +
                     " samples");
  }

  OverheadStats stats;
  stats.n = values.size() - flagged.size();
  stats.n_outliers_removed = flagged.size();
  const auto m = two_pass(values, &removed);
  stats.mean_ns = m.mean;
  stats.stddev_ns = m.stddev;
  bool first = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (removed[i]) continue;
    if (first || values[i] < stats.min_ns) stats.min_ns = values[i];
    if (first || values[i] > stats.max_ns) stats.max_ns = values[i];
    first = false;
  }
  return stats;
}

OverheadStats overhead_stats(std::span<const OverheadSample> samples, const OutlierRule& rule) {
  std::vector<std::uint64_t> totals;
  totals.reserve(samples.size());
  for (const auto& s : samples) totals.push_back(s.t_total_ns);
  return overhead_stats(totals, rule);
}

std::optional<std::int64_t> HistogramReport::modal_bin() const {
  std::optional<std::int64_t> best;
  std::uint64_t best_count = 0;
  for (const auto& [offset, count] : bins) {
    if (count > best_count) {
      best = offset;
      best_count = count;
    }
  }
  return best;
}

HistogramReport histogram(std::span<const OverheadSample> samples, const OverheadStats& stats,
                          bool screenshots_on) {
  HistogramReport report;
  report.center_ns = stats.mean_ns;
  report.bin_width_ns = stats.stddev_ns;
  report.n = samples.size();
  for (const auto& s : samples) {
    if (screenshots_on && s.t_capture_ns == 0) {
      ++report.no_screenshot;
      continue;
    }
    std::int64_t offset = 0;
    if (stats.stddev_ns > 0) {
      offset = static_cast<std::int64_t>(
          std::floor((static_cast<double>(s.t_total_ns) - stats.mean_ns) / stats.stddev_ns));
    }
    ++report.bins[offset];
  }
  return report;
}

// --- Comparison ------------------------------------------------------------------

std::string summarize(const EventMessage& msg) {
  return msg.source_class + "[" + std::to_string(msg.index_in_parent) + "] " +
         std::string(to_string(msg.event_type));
}

FlakinessReport compare_traces(const TraceRecord& expected, const TraceRecord& actual) {
  const auto& a = expected.events;
  const auto& b = actual.events;
  const std::size_t common = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (a[i].source_class != b[i].source_class || a[i].index_in_parent != b[i].index_in_parent ||
        a[i].event_type != b[i].event_type) {
      return {false, Divergence{i, summarize(a[i]), summarize(b[i])}};
    }
  }
  if (a.size() == b.size()) return {true, std::nullopt};
  const std::string end = "<end of trace>";
  return {false, Divergence{common, common < a.size() ? summarize(a[common]) : end,
                            common < b.size() ? summarize(b[common]) : end}};
}

// --- Reporting -------------------------------------------------------------------

std::string format_ms(double ns) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", ns / 1e6);
  return buf;
}

std::string table_report(std::span<const RunSummary> runs) {
  std::vector<std::string> scenarios;
  for (const auto& r : runs) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) {
      scenarios.push_back(r.scenario);
    }
  }
  auto find = [&](const std::string& scenario, Granularity g, bool shots) -> const RunSummary* {
    for (const auto& r : runs) {
      if (r.scenario == scenario && r.granularity == g && r.screenshots == shots) return &r;
    }
    return nullptr;
  };

  std::size_t name_width = 8;
  for (const auto& s : scenarios) name_width = std::max(name_width, s.size());

  std::ostringstream out;
  for (const bool shots : {false, true}) {
    const bool any = std::any_of(runs.begin(), runs.end(),
                                 [&](const RunSummary& r) { return r.screenshots == shots; });
    if (!any) continue;
    out << "Average overhead per event " << (shots ? "with" : "without")
        << " screenshot recording (ms)\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %10s %10s\n", static_cast<int>(name_width), "scenario",
                  "ALL", "HANDLED");
    out << line;
    for (const auto& s : scenarios) {
      const auto* all = find(s, Granularity::All, shots);
      const auto* handled = find(s, Granularity::Handled, shots);
      std::snprintf(line, sizeof line, "%-*s %10s %10s\n", static_cast<int>(name_width), s.c_str(),
                    all ? format_ms(all->stats.mean_ns).c_str() : "-",
                    handled ? format_ms(handled->stats.mean_ns).c_str() : "-");
      out << line;
    }
    out << '\n';
  }

  for (const auto& r : runs) {
    const std::string key = "cell." + r.scenario + "." + std::string(to_string(r.granularity)) + "." +
                            (r.screenshots ? "on" : "off") + ".";
    out << key << "n=" << r.stats.n << '\n';
    out << key << "outliers=" << r.stats.n_outliers_removed << '\n';
    out << key << "mean_ms=" << format_ms(r.stats.mean_ns) << '\n';
    out << key << "stddev_ms=" << format_ms(r.stats.stddev_ns) << '\n';
  }
  return out.str();
}

// --- Rendering cost --------------------------------------------------------------

std::vector<std::uint64_t> render_medians(std::span<const int> sides, int trials) {
  std::vector<std::uint64_t> medians;
  for (const int side : sides) {
    const std::vector<WidgetSpec> specs{
        {WidgetId{1}, "Window", std::nullopt, Geometry{0, 0, side, side}, true, false},
        {WidgetId{2}, "Panel", WidgetId{1}, Geometry{0, 0, side / 2, side / 2}, true, false}};
    const auto tree = WidgetTree::build(specs);
    std::vector<std::uint64_t> times;
    times.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      const auto start = std::chrono::steady_clock::now();
      auto shot = render_screenshot(tree, WidgetId{1});
      const auto end = std::chrono::steady_clock::now();
      if (!shot || shot->pixels.empty()) throw RunError("render produced no pixels");
      times.push_back(static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count()));
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2),
                     times.end());
    medians.push_back(times[times.size() / 2]);
  }
  return medians;
}

}  // namespace evtrace::bench
