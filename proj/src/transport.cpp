#include "evtrace/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <utility>

#include "text_util.hpp"

namespace evtrace::net {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const noexcept { freeaddrinfo(p); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV | (passive ? AI_PASSIVE : 0);
  addrinfo* result = nullptr;
  const auto port = std::to_string(endpoint.port);
  const char* host = endpoint.host.empty() ? nullptr : endpoint.host.c_str();
  if (int rc = getaddrinfo(host, port.c_str(), &hints, &result); rc != 0) {
    throw TransportError("cannot resolve " + endpoint.to_string() + ": " + gai_strerror(rc));
  }
  return AddrInfoPtr(result);
}

void tune_socket(int fd) noexcept {
  int one = 1;
  (void)::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  int size = kSocketBufferBytes;
  (void)::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &size, sizeof(size));
  (void)::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &size, sizeof(size));
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  Endpoint endpoint;
  std::string_view host;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw TransportError("malformed endpoint '" + std::string(text) + "'");
    }
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw TransportError("endpoint '" + std::string(text) + "' lacks ':port'");
    }
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  const auto port_value = detail::parse_int<std::uint16_t>(port);
  if (!port_value) throw TransportError("invalid port in endpoint '" + std::string(text) + "'");
  endpoint.host = std::string(host);
  endpoint.port = *port_value;
  return endpoint;
}

std::string Endpoint::to_string() const {
  const bool v6 = host.find(':') != std::string::npos;
  return (v6 ? "[" + host + "]" : host) + ":" + std::to_string(port);
}

// --- TcpStream ------------------------------------------------------------------

TcpStream::~TcpStream() { close(); }

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

TcpStream TcpStream::connect(const Endpoint& endpoint) {
  auto addresses = resolve(endpoint, false);
  std::string last_error = "no addresses";
  for (addrinfo* ai = addresses.get(); ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text("socket");
      continue;
    }
    tune_socket(fd);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      return TcpStream(fd);
    }
    last_error = errno_text("connect");
    ::close(fd);
  }
  throw TransportError("cannot connect to " + endpoint.to_string() + " (" + last_error + ")");
}

void TcpStream::write_all(wire::ByteView bytes) {
  if (fd_ < 0) throw TransportError("write on closed stream");
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    const ssize_t n = ::send(fd_, p, left, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> buffer) {
  if (fd_ < 0) throw TransportError("read on closed stream");
  while (true) {
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    throw TransportError(errno_text("recv"));
  }
}

void TcpStream::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

// --- TcpListener ----------------------------------------------------------------

TcpListener::~TcpListener() { close(); }

TcpListener::TcpListener(TcpListener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), host_(std::move(other.host_)) {}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    host_ = std::move(other.host_);
  }
  return *this;
}

TcpListener TcpListener::bind(const Endpoint& endpoint) {
  auto addresses = resolve(endpoint, true);
  std::string last_error = "no addresses";
  for (addrinfo* ai = addresses.get(); ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text("socket");
      continue;
    }
    int one = 1;
    (void)::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    tune_socket(fd);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 1) == 0) {
      TcpListener listener;
      listener.fd_ = fd;
      listener.host_ = endpoint.host;
      return listener;
    }
    last_error = errno_text("bind/listen");
    ::close(fd);
  }
  throw TransportError("cannot listen on " + endpoint.to_string() + " (" + last_error + ")");
}

Endpoint TcpListener::local_endpoint() const {
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw TransportError(errno_text("getsockname"));
  }
  Endpoint endpoint;
  std::array<char, INET6_ADDRSTRLEN> text{};
  if (addr.ss_family == AF_INET6) {
    const auto* in6 = reinterpret_cast<const sockaddr_in6*>(&addr);
    ::inet_ntop(AF_INET6, &in6->sin6_addr, text.data(), text.size());
    endpoint.port = ntohs(in6->sin6_port);
  } else {
    const auto* in4 = reinterpret_cast<const sockaddr_in*>(&addr);
    ::inet_ntop(AF_INET, &in4->sin_addr, text.data(), text.size());
    endpoint.port = ntohs(in4->sin_port);
  }
  endpoint.host = text.data();
  if (endpoint.host == "0.0.0.0") endpoint.host = "127.0.0.1";
  if (endpoint.host == "::") endpoint.host = "::1";
  return endpoint;
}

TcpStream TcpListener::accept() {
  if (fd_ < 0) throw TransportError("accept on closed listener");
  while (true) {
    int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      tune_socket(fd);
      return TcpStream(fd);
    }
    if (errno == EINTR) continue;
    throw TransportError(errno_text("accept"));
  }
}

void TcpListener::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

// --- MemorySink -----------------------------------------------------------------

void MemorySink::write_all(wire::ByteView bytes) {
  if (writes_ >= fail_after_) throw TransportError("simulated write failure");
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
  ++writes_;
}

wire::Frame read_frame(ByteSource& source, wire::StreamDecoder& decoder) {
  std::array<std::uint8_t, 4096> buffer{};
  while (true) {
    auto result = decoder.next();
    if (auto* decoded = std::get_if<wire::Decoded>(&result)) return std::move(decoded->frame);
    if (auto* bad = std::get_if<wire::Malformed>(&result)) {
      throw TransportError("malformed frame at stream offset " + std::to_string(bad->offset) + ": " +
                           bad->reason);
    }
    const auto n = source.read_some(buffer);
    if (n == 0) throw TransportError("connection closed before a complete frame arrived");
    decoder.feed(std::span(buffer).first(n));
  }
}

}  // namespace evtrace::net
