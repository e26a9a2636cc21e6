#include "evtrace/host.hpp"

#include <array>
#include <exception>
#include <ostream>

namespace evtrace::host {

std::string_view to_string(ConnectorState state) noexcept {
  switch (state) {
    case ConnectorState::Created: return "CREATED";
    case ConnectorState::Connected: return "CONNECTED";
    case ConnectorState::Closed: return "CLOSED";
    case ConnectorState::Failed: return "FAILED";
  }
  return "?";
}

Connector::Connector(InstrumentConfig config) : config_(std::move(config)) {}

Connector::~Connector() {
  close();
}

std::string Connector::failure_reason() const {
  std::lock_guard lock(mutex_);
  return failure_reason_;
}

std::optional<wire::SessionHello> Connector::agent_hello() const {
  std::lock_guard lock(mutex_);
  return agent_hello_;
}

void Connector::fail(std::string reason) {
  std::lock_guard lock(mutex_);
  if (state_ == ConnectorState::Failed || state_ == ConnectorState::Closed) return;
  failure_reason_ = std::move(reason);
  state_ = ConnectorState::Failed;
}

void Connector::connect(const net::Endpoint& endpoint, const ConnectOptions& options) {
  if (state_ != ConnectorState::Created) {
    throw StateError("connect() requires a CREATED connector, state is " +
                     std::string(to_string(state_)));
  }
  try {
    stream_ = net::TcpStream::connect(endpoint);
    const wire::SessionHello ours{options.identity.protocol_version, options.identity.name, ""};
    stream_.write_all(wire::encode_frame(wire::make_frame(ours)));

    auto frame = net::read_frame(stream_, decoder_);
    if (frame.kind != wire::FrameKind::Hello) {
      throw ConnectError("expected HELLO from agent, got " + std::string(wire::to_string(frame.kind)));
    }
    auto hello = wire::decode_hello(frame.payload);
    if (hello.protocol_version != options.identity.protocol_version) {
      throw ConnectError("protocol version mismatch: agent speaks " +
                         std::to_string(hello.protocol_version) + ", host speaks " +
                         std::to_string(options.identity.protocol_version));
    }
    {
      std::lock_guard lock(mutex_);
      agent_hello_ = std::move(hello);
    }
    stream_.write_all(wire::encode_frame(wire::make_frame(config_)));
  } catch (const std::exception& e) {
    const std::string reason = dynamic_cast<const ConnectError*>(&e)
                                   ? e.what()
                                   : "connect to " + endpoint.to_string() + " failed: " + e.what();
    fail(reason);
    stream_.close();
    throw ConnectError(reason);
  }
  state_ = ConnectorState::Connected;
  if (options.start_delivery_thread) {
    delivery_ = std::thread([this] { receive_loop(); });
  }
}

SubscriptionId Connector::add_event_message_listener(EventMessageListener& listener) {
  return add_event_message_listener(
      [&listener](const EventMessage& msg) { listener.message_received(msg); });
}

SubscriptionId Connector::add_event_message_listener(std::function<void(const EventMessage&)> callback) {
  std::lock_guard lock(mutex_);
  const SubscriptionId id{next_subscription_++};
  auto next = std::make_shared<EntryList>(*listeners_);
  next->push_back(Entry{id, std::move(callback)});
  listeners_ = std::move(next);
  return id;
}

bool Connector::remove_event_message_listener(SubscriptionId id) {
  std::lock_guard lock(mutex_);
  auto next = std::make_shared<EntryList>();
  for (const auto& entry : *listeners_) {
    if (entry.id != id) next->push_back(entry);
  }
  const bool removed = next->size() != listeners_->size();
  if (removed) listeners_ = std::move(next);
  return removed;
}

void Connector::deliver(const EventMessage& msg) {
  std::shared_ptr<const EntryList> snapshot;
  {
    std::lock_guard lock(mutex_);
    snapshot = listeners_;
  }
  for (const auto& entry : *snapshot) {
    try {
      entry.callback(msg);
    } catch (...) {
    }
  }
}

ConnectorState Connector::receive_loop() {
  if (state_ != ConnectorState::Connected) return state_;
  std::vector<std::uint8_t> buffer(1024 * 1024);
  std::uint64_t expected_id = 1;

  while (true) {
    auto result = decoder_.next();
    if (std::holds_alternative<wire::NeedMore>(result)) {
      std::size_t n = 0;
      try {
        n = stream_.read_some(buffer);
      } catch (const std::exception& e) {
        if (closing_) break;
        fail(std::string("read failed: ") + e.what());
        return state_;
      }
      if (n == 0) {
        if (closing_) break;
        fail("connection lost after event " + std::to_string(expected_id - 1) +
             " without BYE (" + std::to_string(decoder_.buffered()) + " bytes of partial frame)");
        return state_;
      }
      decoder_.feed(std::span(buffer).first(n));
      continue;
    }
    if (auto* bad = std::get_if<wire::Malformed>(&result)) {
      fail("malformed frame at stream offset " + std::to_string(bad->offset) + ": " + bad->reason);
      return state_;
    }

    auto& decoded = std::get<wire::Decoded>(result);
    const auto frame_start = decoder_.stream_offset() - decoded.consumed;
    switch (decoded.frame.kind) {
      case wire::FrameKind::Bye: {
        std::lock_guard lock(mutex_);
        if (state_ == ConnectorState::Connected) state_ = ConnectorState::Closed;
        return state_;
      }
      case wire::FrameKind::Hello:
      case wire::FrameKind::Config:
        fail("unexpected " + std::string(wire::to_string(decoded.frame.kind)) +
             " frame at stream offset " + std::to_string(frame_start));
        return state_;
      case wire::FrameKind::Event:
        break;
    }

    EventMessage msg;
    try {
      msg = wire::decode_event(decoded.frame.payload);
    } catch (const wire::DecodeError& e) {
      fail("malformed EVENT at stream offset " +
           std::to_string(frame_start + wire::kFrameHeaderSize + e.offset()) + ": " + e.what());
      return state_;
    }
    if (msg.id != expected_id) {
      fail("event loss detected: expected id " + std::to_string(expected_id) + ", received " +
           std::to_string(msg.id));
      return state_;
    }
    ++expected_id;
    received_.fetch_add(1);
    deliver(msg);
  }

  std::lock_guard lock(mutex_);
  if (state_ == ConnectorState::Connected) state_ = ConnectorState::Closed;
  return state_;
}

ConnectorState Connector::wait() {
  if (delivery_.joinable()) delivery_.join();
  return state_;
}

void Connector::close() {
  closing_ = true;
  stream_.shutdown();
  if (delivery_.joinable()) delivery_.join();
  stream_.close();
  std::lock_guard lock(mutex_);
  if (state_ == ConnectorState::Connected) state_ = ConnectorState::Closed;
}

// --- TraceRecorder --------------------------------------------------------------

TraceRecorder::TraceRecorder(Connector& connector, std::ostream& sink, std::string scenario_name)
    : connector_(connector), writer_(sink, scenario_name, connector.config()) {
  subscription_ = connector_.add_event_message_listener([this](const EventMessage& msg) {
    std::lock_guard lock(mutex_);
    writer_.append(msg);
  });
}

TraceRecorder::~TraceRecorder() {
  connector_.remove_event_message_listener(subscription_);
}

void TraceRecorder::finish(std::span<const OverheadSample> samples) {
  connector_.remove_event_message_listener(subscription_);
  std::lock_guard lock(mutex_);
  writer_.finish(samples);
}

bool TraceRecorder::failed() const {
  std::lock_guard lock(mutex_);
  return writer_.failed();
}

std::uint64_t TraceRecorder::recorded() const {
  std::lock_guard lock(mutex_);
  return writer_.event_count();
}

std::unique_ptr<TraceRecorder> record_trace(Connector& connector, std::ostream& sink,
                                            std::string scenario_name) {
  const auto state = connector.state();
  if (state == ConnectorState::Closed || state == ConnectorState::Failed) {
    throw StateError("cannot record a trace from a " + std::string(to_string(state)) + " connector");
  }
  return std::make_unique<TraceRecorder>(connector, sink, std::move(scenario_name));
}

}  // namespace evtrace::host
