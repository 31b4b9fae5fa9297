#include "obnn/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "obnn/error.hpp"

namespace obnn {

void Channel::note(Dir d) {
  if (d != last_) {
    ++rounds_;
    last_ = d;
  }
}

void Channel::send(std::span<const std::uint8_t> data) {
  note(Dir::kSend);
  write_bytes(data);
  sent_ += data.size();
}

void Channel::recv(std::span<std::uint8_t> data) {
  if (last_ == Dir::kSend) flush_bytes();
  note(Dir::kRecv);
  read_bytes(data);
  received_ += data.size();
}

void Channel::flush() { flush_bytes(); }

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed = false;
};

class MemoryChannel : public Channel {
 public:
  MemoryChannel(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryChannel() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
    out_->cv.notify_all();
  }

 protected:
  void write_bytes(std::span<const std::uint8_t> data) override {
    std::lock_guard lock(out_->mu);
    out_->data.insert(out_->data.end(), data.begin(), data.end());
    out_->cv.notify_all();
  }
  void read_bytes(std::span<std::uint8_t> data) override {
    std::unique_lock lock(in_->mu);
    std::size_t got = 0;
    while (got < data.size()) {
      in_->cv.wait(lock, [&] { return !in_->data.empty() || in_->closed; });
      if (in_->data.empty()) throw TransportError("peer closed the channel");
      const std::size_t n = std::min(data.size() - got, in_->data.size());
      std::copy_n(in_->data.begin(), n, data.begin() + static_cast<std::ptrdiff_t>(got));
      in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<std::ptrdiff_t>(n));
      got += n;
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override {
    try {
      flush_bytes();
    } catch (const Error&) {
    }
    ::close(fd_);
  }

 protected:
  void write_bytes(std::span<const std::uint8_t> data) override {
    buf_.insert(buf_.end(), data.begin(), data.end());
    if (buf_.size() >= kBufferLimit) flush_bytes();
  }
  void flush_bytes() override {
    std::size_t off = 0;
    while (off < buf_.size()) {
      const ssize_t n = ::send(fd_, buf_.data() + off, buf_.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw TransportError(std::string("send failed: ") + std::strerror(errno));
      off += static_cast<std::size_t>(n);
    }
    buf_.clear();
  }
  void read_bytes(std::span<std::uint8_t> data) override {
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::recv(fd_, data.data() + off, data.size() - off, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n == 0) throw TransportError("connection closed by peer");
      if (n < 0) throw TransportError(std::string("recv failed: ") + std::strerror(errno));
      off += static_cast<std::size_t>(n);
    }
  }

 private:
  static constexpr std::size_t kBufferLimit = 1 << 16;
  int fd_;
  std::vector<std::uint8_t> buf_;
};

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + host + "'");
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> memory_channel_pair() {
  auto ab = std::make_shared<Pipe>();
  auto ba = std::make_shared<Pipe>();
  return {std::make_unique<MemoryChannel>(ba, ab), std::make_unique<MemoryChannel>(ab, ba)};
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError("socket() failed");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 1) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpChannel>(fd);
    if (errno != EINTR) throw TransportError(std::string("accept failed: ") + std::strerror(errno));
  }
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port, int timeout_ms) {
  const sockaddr_in addr = resolve(host, port);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      return std::make_unique<TcpChannel>(fd);
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw ParseError("address must be host:port, got '" + addr + "'");
  }
  const std::string port_text = addr.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument("junk");
  } catch (const std::exception&) {
    throw ParseError("bad port in '" + addr + "'");
  }
  if (port > 65535) throw ParseError("bad port in '" + addr + "'");
  return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

const char* to_string(FrameType t) {
  switch (t) {
    case FrameType::kCircuitMeta: return "CIRCUIT_META";
    case FrameType::kGarblerLabels: return "GARBLER_LABELS";
    case FrameType::kAndTables: return "AND_TABLES";
    case FrameType::kOtMsg: return "OT_MSG";
    case FrameType::kDecodeTable: return "DECODE_TABLE";
    case FrameType::kOutputAck: return "OUTPUT_ACK";
  }
  return "?";
}

void write_frame(Channel& ch, FrameType type, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxFramePayload) throw ProtocolError("frame payload too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  const std::uint8_t header[kFrameHeaderBytes] = {
      static_cast<std::uint8_t>(type), static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(n >> 8),
      static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 24)};
  ch.send(header);
  ch.send(payload);
}

std::vector<std::uint8_t> read_frame(Channel& ch, FrameType expected) {
  std::uint8_t header[kFrameHeaderBytes];
  ch.recv(header);
  const auto type = static_cast<FrameType>(header[0]);
  if (type != expected) {
    throw ProtocolError(std::string("expected ") + to_string(expected) + " frame, got type " +
                        std::to_string(header[0]));
  }
  const std::uint32_t n = header[1] | (header[2] << 8) | (header[3] << 16) |
                          (static_cast<std::uint32_t>(header[4]) << 24);
  if (n > kMaxFramePayload) throw ProtocolError("frame length too large");
  std::vector<std::uint8_t> payload(n);
  ch.recv(payload);
  return payload;
}

}  // namespace obnn
