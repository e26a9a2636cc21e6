#pragma once

// Blocking byte-stream transports used between agent and host.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "evtrace/wire.hpp"

namespace evtrace::net {

/// SO_SNDBUF / SO_RCVBUF requested for every TCP socket. Capped by the
/// kernel's wmem_max / rmem_max.
inline constexpr int kSocketBufferBytes = 4 * 1024 * 1024;

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; IPv6 literals may be bracketed ("[::1]:7000").
  static Endpoint parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  /// Returns only once every byte has been handed to the transport.
  virtual void write_all(wire::ByteView bytes) = 0;
};

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  /// Returns 0 on orderly end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
};

class TcpStream final : public ByteSink, public ByteSource {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) noexcept : fd_(fd) {}
  ~TcpStream() override;

  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  static TcpStream connect(const Endpoint& endpoint);

  void write_all(wire::ByteView bytes) override;
  std::size_t read_some(std::span<std::uint8_t> buffer) override;

  /// Unblocks a reader on another thread; safe to call concurrently with it.
  void shutdown() noexcept;
  void close() noexcept;
  bool is_open() const noexcept { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  ~TcpListener();

  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Port 0 picks an ephemeral port; see local_endpoint().
  static TcpListener bind(const Endpoint& endpoint);

  Endpoint local_endpoint() const;
  TcpStream accept();
  void close() noexcept;

 private:
  int fd_ = -1;
  std::string host_;
};

/// In-memory sink, mostly for tests. Optionally fails once `fail_after`
/// writes have succeeded.
class MemorySink final : public ByteSink {
 public:
  MemorySink() = default;
  explicit MemorySink(std::size_t fail_after) : fail_after_(fail_after) {}

  void write_all(wire::ByteView bytes) override;

  const wire::Bytes& bytes() const noexcept { return bytes_; }
  std::size_t writes() const noexcept { return writes_; }

 private:
  wire::Bytes bytes_;
  std::size_t writes_ = 0;
  std::size_t fail_after_ = static_cast<std::size_t>(-1);
};

/// Reads from `source` into `decoder` until one frame is available.
/// Throws TransportError on end of stream or malformed input.
wire::Frame read_frame(ByteSource& source, wire::StreamDecoder& decoder);

}  // namespace evtrace::net
