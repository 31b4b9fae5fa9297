#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "obnn/circuit.hpp"
#include "obnn/crypto.hpp"
#include "obnn/ot.hpp"
#include "obnn/transport.hpp"

namespace obnn {

struct SessionOptions {
  OtKind ot = OtKind::kSimplest;
  /// Garbling seed; a fresh OS seed when empty. A seed may be used for at
  /// most one session per process.
  std::optional<Seed> seed;
  /// AND gates per AND_TABLES frame.
  std::size_t ands_per_frame = 4096;
};

/// Traffic and gate accounting for one endpoint. Payload categories plus
/// frame headers sum to bytes_sent + bytes_received.
struct SessionReport {
  std::int64_t nonxor = 0;
  std::int64_t xor_gates = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  int rounds = 0;
  double wall_ms = 0;

  std::uint64_t meta_bytes = 0;
  std::uint64_t ot_bytes = 0;
  std::uint64_t label_bytes = 0;
  std::uint64_t table_bytes = 0;
  std::uint64_t decode_bytes = 0;
  std::uint64_t ack_bytes = 0;
  std::uint64_t header_bytes = 0;
  std::size_t frames = 0;
};

/// JSON object with nonxor, xor, bytes_sent, bytes_received, rounds, wall_ms
/// and the per-section breakdown.
std::string to_json(const SessionReport& r);

/// Garbler side of one session. Message order: CIRCUIT_META + OT_MSG,
/// then (after the evaluator's META + OT_MSG) OT_MSG, GARBLER_LABELS,
/// AND_TABLES..., DECODE_TABLE, then OUTPUT_ACK from the evaluator.
SessionReport run_garbler(Channel& ch, const Circuit& circuit,
                          std::span<const std::uint8_t> garbler_bits,
                          const SessionOptions& opts = {});

struct EvaluatorResult {
  Bits outputs;
  SessionReport report;
};

EvaluatorResult run_evaluator(Channel& ch, const Circuit& circuit,
                              std::span<const std::uint8_t> evaluator_bits,
                              const SessionOptions& opts = {});

}  // namespace obnn
