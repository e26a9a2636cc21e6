#include "evtrace/agent.hpp"

#include <time.h>

#include <algorithm>
#include <exception>

namespace evtrace {

const MonotonicClock& steady_clock() noexcept {
  static const SteadyClock clock;
  return clock;
}

std::uint64_t ThreadCpuClock::now_ns() const noexcept {
  timespec ts{};
  ::clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<std::uint64_t>(ts.tv_sec) * 1'000'000'000u + static_cast<std::uint64_t>(ts.tv_nsec);
}

const MonotonicClock& thread_cpu_clock() noexcept {
  static const ThreadCpuClock clock;
  return clock;
}

// --- AgentTransport -------------------------------------------------------------

AgentTransport AgentTransport::accept_host(net::TcpListener& listener, const AgentIdentity& identity) {
  try {
    net::TcpStream stream = listener.accept();
    wire::StreamDecoder decoder;

    auto frame = net::read_frame(stream, decoder);
    if (frame.kind != wire::FrameKind::Hello) {
      throw AgentError("expected HELLO from host, got " + std::string(wire::to_string(frame.kind)));
    }
    auto host_hello = wire::decode_hello(frame.payload);

    const wire::SessionHello ours{identity.protocol_version, identity.agent_name, identity.toolkit_name};
    stream.write_all(wire::encode_frame(wire::make_frame(ours)));
    if (host_hello.protocol_version != identity.protocol_version) {
      throw AgentError("protocol version mismatch: host speaks " +
                       std::to_string(host_hello.protocol_version) + ", agent speaks " +
                       std::to_string(identity.protocol_version));
    }

    frame = net::read_frame(stream, decoder);
    if (frame.kind != wire::FrameKind::Config) {
      throw AgentError("expected CONFIG from host, got " + std::string(wire::to_string(frame.kind)));
    }
    auto config = wire::decode_config(frame.payload);

    AgentTransport transport(std::make_unique<net::TcpStream>(std::move(stream)), std::move(config));
    transport.host_hello_ = std::move(host_hello);
    return transport;
  } catch (const AgentError&) {
    throw;
  } catch (const std::exception& e) {
    throw AgentError(std::string("handshake failed: ") + e.what());
  }
}

const InstrumentConfig& AgentTransport::config() const {
  if (!config_) throw AgentError("no CONFIG received from host");
  return *config_;
}

net::ByteSink& AgentTransport::sink() const {
  if (!sink_) throw AgentError("transport not connected");
  return *sink_;
}

// --- Listener capture ------------------------------------------------------------

std::vector<HandlerRef> collect_listeners(const DispatchTable& table, WidgetId widget, EventType type) {
  const auto live = table.listeners(widget, type);
  return {live.begin(), live.end()};
}

// --- AgentSession ----------------------------------------------------------------

AgentSession::AgentSession(DispatchCore& core, AgentTransport transport, const MonotonicClock& clock)
    : core_(core), transport_(std::move(transport)), config_(transport_.config()), clock_(clock) {
  core_.attach_instrumentation();
  try {
    hook_ = core_.add_hooks([this](const FireContext& fire) { (void)on_event_fired(fire); });
  } catch (...) {
    core_.detach_instrumentation();
    throw;
  }
}

AgentSession::~AgentSession() {
  try {
    close();
  } catch (...) {
  }
}

std::optional<Screenshot> AgentSession::capture_screenshot(std::optional<WidgetId> window) const {
  if (!window) return std::nullopt;
  return render_screenshot(core_.tree(), *window);
}

FireOutcome AgentSession::on_event_fired(const FireContext& fire) {
  const std::uint64_t start = clock_.now_ns();

  if (!passes_filters(config_, fire.type, fire.listeners.size())) {
    ++filtered_;
    return FireOutcome::Filtered;
  }
  if (state_ != SessionState::Active) {
    ++dropped_;
    return FireOutcome::Dropped;
  }

  EventMessage msg;
  msg.id = next_id_;
  msg.source_class = fire.widget.class_name;
  msg.index_in_parent = fire.widget.index_in_parent;
  msg.geometry = fire.widget.geometry;
  msg.event_type = fire.type;
  msg.listeners = collect_listeners(core_.table(), fire.widget.id, fire.type);

  std::uint64_t capture_ns = 0;
  if (config_.capture_screenshots) {
    const std::uint64_t capture_start = clock_.now_ns();
    const auto window = core_.active_window();
    if (window && render_screenshot_into(core_.tree(), *window, scratch_)) {
      msg.screenshot = std::move(scratch_);
      capture_ns = std::max<std::uint64_t>(clock_.now_ns() - capture_start, 1);
    }
  }

  // The frame cannot carry its own send time: the wire timers are a snapshot
  // taken just before serialization. The OverheadSample holds final values.
  msg.timers.emplace(timers::kCapture, capture_ns);
  msg.timers.emplace(timers::kSend, 0);
  msg.timers.emplace(timers::kTotal, std::max(clock_.now_ns() - start, capture_ns));

  const std::uint64_t send_start = clock_.now_ns();
  try {
    frame_buffer_.clear();
    wire::append_event_frame(frame_buffer_, msg);
    transport_.sink().write_all(frame_buffer_);
  } catch (const std::exception& e) {
    if (msg.screenshot) scratch_ = std::move(*msg.screenshot);
    fail(e.what());
    ++dropped_;
    return FireOutcome::Dropped;
  }
  const std::uint64_t end = clock_.now_ns();
  if (msg.screenshot) scratch_ = std::move(*msg.screenshot);

  OverheadSample sample;
  sample.event_id = next_id_;
  sample.t_capture_ns = capture_ns;
  sample.t_send_ns = end - send_start;
  sample.t_total_ns = end - start;
  samples_.push_back(sample);
  ++next_id_;
  return FireOutcome::Transmitted;
}

void AgentSession::fail(const std::string& reason) {
  state_ = SessionState::Failed;
  failure_ = reason;
  if (on_failure_) {
    try {
      on_failure_(reason);
    } catch (...) {
    }
  }
}

void AgentSession::close() {
  if (detached_) return;
  detached_ = true;
  core_.remove_hooks(hook_);
  core_.detach_instrumentation();
  if (state_ == SessionState::Active) {
    state_ = SessionState::Closed;
    transport_.sink().write_all(wire::encode_frame(wire::make_bye_frame()));
  }
}

std::unique_ptr<AgentSession> install_agent(DispatchCore& core, AgentTransport transport,
                                            const MonotonicClock& clock) {
  if (!transport.ready()) {
    throw AgentError("cannot install agent: transport not connected or no CONFIG received");
  }
  if (core.instrumented()) {
    throw AgentError("cannot install agent: an agent is already installed on this dispatch core");
  }
  return std::make_unique<AgentSession>(core, std::move(transport), clock);
}

}  // namespace evtrace
