#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "obnn/circuit.hpp"
#include "obnn/crypto.hpp"

namespace obnn {

/// Batch 1-out-of-2 OT in three messages:
///   sender.setup() -> receiver.choose() -> sender.transfer() -> receiver.finish().
/// Malformed messages raise ProtocolError.
class OtSender {
 public:
  virtual ~OtSender() = default;
  virtual std::vector<std::uint8_t> setup() = 0;
  virtual std::vector<std::uint8_t> transfer(std::span<const std::uint8_t> choose_msg,
                                             std::span<const std::pair<Block, Block>> messages) = 0;
};

class OtReceiver {
 public:
  virtual ~OtReceiver() = default;
  virtual std::vector<std::uint8_t> choose(std::span<const std::uint8_t> setup_msg,
                                           std::span<const std::uint8_t> choices) = 0;
  virtual std::vector<Block> finish(std::span<const std::uint8_t> transfer_msg) = 0;
};

enum class OtKind : std::uint8_t {
  kSimplest,      // Diffie-Hellman based, over NIST P-256
  kInsecureStub,  // reveals the choices to the sender; tests only
};

std::string_view to_string(OtKind kind);

std::unique_ptr<OtSender> make_ot_sender(OtKind kind);
std::unique_ptr<OtReceiver> make_ot_receiver(OtKind kind);

}  // namespace obnn
