#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "obnn/circuit.hpp"
#include "obnn/crypto.hpp"

namespace obnn {

/// Everything the garbler produces for one circuit.
struct GarbledArtifacts {
  Block delta;                      // free-XOR offset, lsb = 1
  std::vector<Block> garbler_zero;  // zero labels of garbler inputs, input order
  std::vector<Block> evaluator_zero;
  std::vector<Block> const_labels;  // active labels of CONST_0 then CONST_1, when present
  std::vector<Block> and_tables;    // 2 ciphertexts per AND gate, gate order
  Bits decode_bits;                 // permute bit of each output's zero label
};

/// Streaming half-gates garbler. Labels are derived from the seed: delta
/// first, then input and constant labels in wire order, so they are available
/// before any table is produced.
class Garbler {
 public:
  Garbler(const Circuit& circuit, const Seed& seed);

  const Block& delta() const { return delta_; }
  Block zero_label(std::uint32_t wire) const { return labels_[wire]; }
  /// Active labels for the garbler's own inputs followed by the constants.
  std::vector<Block> garbler_active_labels(std::span<const std::uint8_t> bits) const;
  /// (label0, label1) pairs for evaluator inputs, for OT.
  std::vector<std::pair<Block, Block>> evaluator_label_pairs() const;

  /// Garbles forward until max_ands tables have been appended or the circuit
  /// ends. Returns the number of AND gates garbled by this call.
  std::size_t garble_some(std::vector<Block>& tables, std::size_t max_ands);
  bool done() const { return next_gate_ == circuit_.gates().size(); }
  /// Valid once done().
  Bits decode_bits() const;

 private:
  const Circuit& circuit_;
  FixedKeyHash hash_;
  Block delta_;
  std::vector<Block> labels_;
  std::size_t next_gate_ = 0;
};

/// Incremental evaluator: consumes AND tables as they arrive.
class Evaluator {
 public:
  /// garbler_labels covers garbler inputs then constants (see Garbler).
  Evaluator(const Circuit& circuit, std::span<const Block> garbler_labels,
            std::span<const Block> evaluator_labels);

  /// Evaluates as far as the supplied tables allow. Throws ProtocolError
  /// when more tables are supplied than the circuit has AND gates.
  void feed(std::span<const Block> tables);
  bool done() const { return next_gate_ == circuit_.gates().size(); }
  std::vector<Block> output_labels() const;

 private:
  void advance(std::span<const Block> tables, std::size_t& used);

  const Circuit& circuit_;
  FixedKeyHash hash_;
  std::vector<Block> labels_;
  std::size_t next_gate_ = 0;
};

/// Number of constant wires in the circuit (0, 1 or 2).
std::size_t constant_count(const Circuit& circuit);

/// One-shot garbling. Deterministic in (circuit, seed).
GarbledArtifacts garble(const Circuit& circuit, const Seed& seed);

/// Active labels for given input bits.
std::vector<Block> encode_inputs(std::span<const Block> zero_labels, const Block& delta,
                                 std::span<const std::uint8_t> bits);

std::vector<Block> evaluate(const Circuit& circuit, const GarbledArtifacts& artifacts,
                            std::span<const Block> garbler_labels,
                            std::span<const Block> evaluator_labels);

Bits decode(std::span<const Block> output_labels, std::span<const std::uint8_t> decode_bits);

}  // namespace obnn
