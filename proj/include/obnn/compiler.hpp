#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "obnn/circuit.hpp"
#include "obnn/model.hpp"
#include "obnn/obc.hpp"

namespace obnn {

/// XNOR of each masked-in activation with its weight sign wire. Positions with
/// mask 0 are skipped. Free: adds no AND gates. Throws ValidationError when the
/// mask selects nothing.
std::vector<WireRef> xnor_vdp(Circuit& c, std::span<const WireRef> activations,
                              std::span<const WireRef> weight_signs,
                              std::span<const std::uint8_t> mask);

/// [value(x) >= t] against a public constant by a borrow chain. Constant
/// borrows are folded, so at most width - 1 AND gates are used.
WireRef compare_ge_const(Circuit& c, const NumberBundle& x, std::int64_t t);

/// OR-reduction of a non-empty window: |window| - 1 AND gates.
WireRef compile_maxpool(Circuit& c, std::span<const WireRef> window);

/// Non-XOR gates attributed to one model layer.
struct LayerCost {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::kFc;
  std::int64_t popcount = 0;      // CONV / FC / OUTPUT
  std::int64_t comparator = 0;    // BN_SIGN
  std::int64_t pool = 0;          // MAXPOOL
  std::int64_t units = 0;         // popcount or comparator instances
  std::int64_t popcount_inputs = 0;  // sum of popcount lengths
  std::int64_t max_fan_in = 0;       // largest single popcount length

  std::int64_t total() const { return popcount + comparator + pool; }
};

struct IoMap {
  std::vector<LayerCost> layers;
  /// Output wires of BN_SIGN / MAXPOOL layers (empty for other layers).
  std::vector<std::vector<WireRef>> activations;
  /// One popcount bundle per class; their bits are the circuit outputs in order.
  std::vector<NumberBundle> scores;
  /// Garbler input values (weight signs) in garbler input order.
  Bits garbler_bits;
};

struct CompiledModel {
  Circuit circuit;
  IoMap io;
};

/// Lowers a validated model into one circuit. Evaluator inputs are the encoded
/// activations; garbler inputs are the nonzero weight signs; thresholds are
/// public structure.
CompiledModel compile_model(const Model& model, ObcKind obc);

/// Integer class scores from decoded circuit outputs.
std::vector<std::int64_t> decode_scores(const IoMap& io, std::span<const std::uint8_t> outputs);

}  // namespace obnn
