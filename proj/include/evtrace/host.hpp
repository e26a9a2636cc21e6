#pragma once

// Observer-side endpoint. Typical use:
//
//   evtrace::host::InstrService service;
//   auto connector = service.configure(config);
//   connector->connect(evtrace::net::Endpoint::parse("10.0.0.5:7000"));
//   connector->add_event_message_listener(my_listener);
//
// Listeners are notified serially, in arrival order, on the connector's
// delivery thread.

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "evtrace/event_model.hpp"
#include "evtrace/overhead_sample.hpp"
#include "evtrace/trace_file.hpp"
#include "evtrace/transport.hpp"
#include "evtrace/wire.hpp"

namespace evtrace::host {

enum class ConnectorState { Created, Connected, Closed, Failed };

std::string_view to_string(ConnectorState state) noexcept;

class EventMessageListener {
 public:
  virtual ~EventMessageListener() = default;
  virtual void message_received(const EventMessage& event) = 0;
};

/// Wrong lifecycle state for the requested operation.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConnectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SubscriptionId : std::uint32_t {};

struct HostIdentity {
  std::string name = "evtrace-host";
  std::uint16_t protocol_version = wire::kProtocolVersion;
};

struct ConnectOptions {
  /// When false, the caller must run receive_loop() itself.
  bool start_delivery_thread = true;
  HostIdentity identity;
};

class Connector {
 public:
  explicit Connector(InstrumentConfig config);
  ~Connector();

  Connector(const Connector&) = delete;
  Connector& operator=(const Connector&) = delete;

  const InstrumentConfig& config() const noexcept { return config_; }
  ConnectorState state() const noexcept { return state_.load(); }
  std::string failure_reason() const;
  std::optional<wire::SessionHello> agent_hello() const;

  /// HELLO exchange, then CONFIG push. Requires state Created (StateError
  /// otherwise). On refusal, unreachable endpoint or protocol mismatch the
  /// connector moves to Failed and ConnectError is thrown.
  void connect(const net::Endpoint& endpoint, const ConnectOptions& options = {});

  /// No replay: a listener only sees events received after it subscribed.
  SubscriptionId add_event_message_listener(EventMessageListener& listener);
  SubscriptionId add_event_message_listener(std::function<void(const EventMessage&)> callback);
  bool remove_event_message_listener(SubscriptionId id);

  /// Decodes frames until BYE (-> Closed), end of stream or a malformed
  /// frame or id gap (-> Failed). Normally run by the delivery thread.
  ConnectorState receive_loop();

  /// Blocks until the delivery thread has finished; returns the final state.
  ConnectorState wait();

  /// Tears the connection down. A connector that is still Connected ends up
  /// Closed.
  void close();

  std::uint64_t received() const noexcept { return received_.load(); }

 private:
  struct Entry {
    SubscriptionId id;
    std::function<void(const EventMessage&)> callback;
  };
  using EntryList = std::vector<Entry>;

  void fail(std::string reason);
  void deliver(const EventMessage& msg);

  InstrumentConfig config_;
  std::atomic<ConnectorState> state_{ConnectorState::Created};
  mutable std::mutex mutex_;
  std::string failure_reason_;
  std::optional<wire::SessionHello> agent_hello_;
  std::shared_ptr<const EntryList> listeners_ = std::make_shared<const EntryList>();
  std::uint32_t next_subscription_ = 1;
  net::TcpStream stream_;
  wire::StreamDecoder decoder_{wire::PayloadCheck::HeaderOnly};
  std::thread delivery_;
  std::atomic<std::uint64_t> received_{0};
  std::atomic<bool> closing_{false};
};

/// Entry point mirroring the host API: configure() yields an unconnected
/// connector holding the configuration.
class InstrService {
 public:
  std::unique_ptr<Connector> configure(const InstrumentConfig& config) const {
    return std::make_unique<Connector>(config);
  }
};

/// Streams every event the connector receives into a trace file.
class TraceRecorder {
 public:
  TraceRecorder(Connector& connector, std::ostream& sink, std::string scenario_name);
  ~TraceRecorder();

  TraceRecorder(const TraceRecorder&) = delete;
  TraceRecorder& operator=(const TraceRecorder&) = delete;

  /// Writes the footer and flushes. Call once the connector has closed.
  void finish(std::span<const OverheadSample> samples = {});

  /// True once a sink write failed; recording stopped at that point.
  bool failed() const;
  std::uint64_t recorded() const;

 private:
  Connector& connector_;
  mutable std::mutex mutex_;
  TraceWriter writer_;
  SubscriptionId subscription_{};
};

/// Subscribes a recorder to `connector`. The connector must not be Closed or
/// Failed; subscribing before connect() guarantees no event is missed.
std::unique_ptr<TraceRecorder> record_trace(Connector& connector, std::ostream& sink,
                                            std::string scenario_name);

}  // namespace evtrace::host
