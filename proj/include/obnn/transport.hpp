#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace obnn {

/// Byte-oriented duplex channel with traffic accounting. A "round" is one
/// flight of messages in a single direction; the counter increments whenever
/// this endpoint switches between sending and receiving.
class Channel {
 public:
  virtual ~Channel() = default;

  void send(std::span<const std::uint8_t> data);
  /// Reads exactly data.size() bytes; throws TransportError on EOF.
  void recv(std::span<std::uint8_t> data);
  void flush();

  std::uint64_t bytes_sent() const { return sent_; }
  std::uint64_t bytes_received() const { return received_; }
  int rounds() const { return rounds_; }

 protected:
  virtual void write_bytes(std::span<const std::uint8_t> data) = 0;
  virtual void read_bytes(std::span<std::uint8_t> data) = 0;
  virtual void flush_bytes() {}

 private:
  enum class Dir { kNone, kSend, kRecv };
  void note(Dir d);

  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
  int rounds_ = 0;
  Dir last_ = Dir::kNone;
};

/// Two connected in-process endpoints.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> memory_channel_pair();

class TcpListener {
 public:
  /// Binds host:port; port 0 picks an ephemeral port.
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Connects with retries until timeout_ms elapses.
std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port,
                                     int timeout_ms = 10000);

/// Splits "host:port".
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

// Framing: u8 type, u32 little-endian length, payload.
enum class FrameType : std::uint8_t {
  kCircuitMeta = 1,
  kGarblerLabels = 2,
  kAndTables = 3,
  kOtMsg = 4,
  kDecodeTable = 5,
  kOutputAck = 6,
};

const char* to_string(FrameType t);

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::uint32_t kMaxFramePayload = 1U << 30;

void write_frame(Channel& ch, FrameType type, std::span<const std::uint8_t> payload);
/// Reads one frame and checks its type; throws ProtocolError on a different
/// type or an oversized length.
std::vector<std::uint8_t> read_frame(Channel& ch, FrameType expected);

}  // namespace obnn
