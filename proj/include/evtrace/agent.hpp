#pragma once

// In-process tracing agent. Hooks a DispatchCore, filters fired events,
// assembles EventMessages and streams them synchronously to the host.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evtrace/dispatch_core.hpp"
#include "evtrace/event_model.hpp"
#include "evtrace/overhead_sample.hpp"
#include "evtrace/transport.hpp"
#include "evtrace/wire.hpp"

namespace evtrace {

class MonotonicClock {
 public:
  virtual ~MonotonicClock() = default;
  virtual std::uint64_t now_ns() const noexcept = 0;
};

class SteadyClock final : public MonotonicClock {
 public:
  std::uint64_t now_ns() const noexcept override {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
  }
};

/// CPU time consumed by the calling thread, kernel time included. Time the
/// thread spends descheduled is not counted.
class ThreadCpuClock final : public MonotonicClock {
 public:
  std::uint64_t now_ns() const noexcept override;
};

const MonotonicClock& steady_clock() noexcept;
const MonotonicClock& thread_cpu_clock() noexcept;

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AgentIdentity {
  std::string agent_name = "evtrace-agent";
  std::string toolkit_name = "synthetic";
  std::uint16_t protocol_version = wire::kProtocolVersion;
};

/// Agent side of an established connection: a writable stream plus the
/// configuration the host pushed during the handshake.
class AgentTransport {
 public:
  AgentTransport() = default;
  AgentTransport(std::unique_ptr<net::ByteSink> sink, std::optional<InstrumentConfig> config)
      : sink_(std::move(sink)), config_(std::move(config)) {}

  /// Accepts one host connection and runs the handshake: read the host's
  /// HELLO, answer with ours, then read the CONFIG frame. Throws AgentError
  /// on protocol-version mismatch or any other handshake failure.
  static AgentTransport accept_host(net::TcpListener& listener, const AgentIdentity& identity = {});

  bool ready() const noexcept { return sink_ != nullptr && config_.has_value(); }
  const InstrumentConfig& config() const;
  net::ByteSink& sink() const;
  const std::optional<wire::SessionHello>& host_hello() const noexcept { return host_hello_; }

 private:
  std::unique_ptr<net::ByteSink> sink_;
  std::optional<InstrumentConfig> config_;
  std::optional<wire::SessionHello> host_hello_;
};

enum class FireOutcome { Transmitted, Filtered, Dropped };
enum class SessionState { Active, Failed, Closed };

/// Returns the handlers currently registered for (widget, type). Rebuilt on
/// every call.
std::vector<HandlerRef> collect_listeners(const DispatchTable& table, WidgetId widget, EventType type);

class AgentSession {
 public:
  AgentSession(DispatchCore& core, AgentTransport transport, const MonotonicClock& clock);
  ~AgentSession();

  AgentSession(const AgentSession&) = delete;
  AgentSession& operator=(const AgentSession&) = delete;

  /// Invoked by the pre-fire hook on the dispatch thread. Returns once the
  /// EVENT frame has been handed to the transport.
  FireOutcome on_event_fired(const FireContext& fire);

  /// Renders the given window; nullopt if there is none or it is hidden.
  std::optional<Screenshot> capture_screenshot(std::optional<WidgetId> window) const;

  /// Stops tracing and, unless the session already failed, sends BYE.
  /// Idempotent.
  void close();

  const InstrumentConfig& config() const noexcept { return config_; }
  SessionState state() const noexcept { return state_; }
  std::uint64_t next_id() const noexcept { return next_id_; }
  std::uint64_t transmitted() const noexcept { return next_id_ - 1; }
  std::uint64_t filtered() const noexcept { return filtered_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  const std::optional<std::string>& failure() const noexcept { return failure_; }

  /// Called once, on the dispatch thread, when the transport fails.
  void set_failure_callback(std::function<void(const std::string&)> callback) {
    on_failure_ = std::move(callback);
  }

  std::span<const OverheadSample> samples() const noexcept { return samples_; }
  std::vector<OverheadSample> drain_samples() { return std::exchange(samples_, {}); }

 private:
  void fail(const std::string& reason);

  DispatchCore& core_;
  AgentTransport transport_;
  InstrumentConfig config_;
  const MonotonicClock& clock_;
  HookId hook_{};
  SessionState state_ = SessionState::Active;
  bool detached_ = false;
  std::uint64_t next_id_ = 1;
  std::uint64_t filtered_ = 0;
  std::uint64_t dropped_ = 0;
  std::optional<std::string> failure_;
  std::function<void(const std::string&)> on_failure_;
  std::vector<OverheadSample> samples_;
  wire::Bytes frame_buffer_;
  Screenshot scratch_;
};

/// Registers the agent's hooks on `core`. Events fired before this call are
/// not traced. Throws AgentError if the transport is not ready or an agent is
/// already installed on the core.
std::unique_ptr<AgentSession> install_agent(DispatchCore& core, AgentTransport transport,
                                            const MonotonicClock& clock = steady_clock());

}  // namespace evtrace
