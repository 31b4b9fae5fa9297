#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace obnn {

/// Plain bit vector; every element is 0 or 1.
using Bits = std::vector<std::uint8_t>;

enum class Party : std::uint8_t { kGarbler = 0, kEvaluator = 1 };

/// Stored gate kinds. NOT is lowered to XOR with the CONST_1 wire.
enum class GateKind : std::uint8_t { kInput, kConst0, kConst1, kXor, kAnd };

std::string_view to_string(GateKind kind);

/// Handle to a wire of a specific circuit. The tag identifies the owning
/// circuit so that wires cannot silently cross circuits.
struct WireRef {
  std::uint32_t id = 0;
  std::uint32_t tag = 0;

  friend bool operator==(const WireRef&, const WireRef&) = default;
};

struct Gate {
  GateKind kind = GateKind::kInput;
  std::uint32_t in0 = 0;
  std::uint32_t in1 = 0;
  Party owner = Party::kGarbler;  // meaningful for kInput only
};

struct GateCount {
  std::int64_t nonxor = 0;
  std::int64_t xor_gates = 0;
  std::int64_t inputs = 0;
  std::int64_t outputs = 0;

  friend bool operator==(const GateCount&, const GateCount&) = default;
};

/// Boolean circuit over XOR/AND with free constants.
///
/// Wires are numbered densely in creation order and every gate defines exactly
/// one wire, so wire id == gate index and every gate reads strictly smaller
/// ids. Construction is append-only; once built the circuit is only read.
class Circuit {
 public:
  Circuit();

  WireRef add_input(Party owner);
  WireRef constant(bool value);
  WireRef gate_xor(WireRef a, WireRef b);
  WireRef gate_and(WireRef a, WireRef b);
  WireRef gate_not(WireRef a);
  /// a OR b as NOT(AND(NOT a, NOT b)): one AND gate.
  WireRef gate_or(WireRef a, WireRef b);

  void add_output(WireRef w);

  /// Rebuilds a reference to an existing wire id of this circuit.
  WireRef wire(std::uint32_t id) const;

  std::span<const Gate> gates() const { return gates_; }
  const std::vector<std::uint32_t>& inputs(Party owner) const {
    return owner == Party::kGarbler ? garbler_inputs_ : evaluator_inputs_;
  }
  const std::vector<std::uint32_t>& outputs() const { return outputs_; }
  std::size_t wire_count() const { return gates_.size(); }
  std::int64_t and_count() const { return and_count_; }

  void reserve(std::size_t gates) { gates_.reserve(gates); }

  /// Structural self-check: topological order, arities, input lists.
  void check() const;

 private:
  void require_own(WireRef w) const;
  WireRef push(Gate g);

  std::uint32_t tag_;
  std::vector<Gate> gates_;
  std::vector<std::uint32_t> garbler_inputs_;
  std::vector<std::uint32_t> evaluator_inputs_;
  std::vector<std::uint32_t> outputs_;
  std::optional<std::uint32_t> const0_;
  std::optional<std::uint32_t> const1_;
  std::int64_t and_count_ = 0;

  friend Circuit parse_circuit(std::string_view text);
};

/// Unsigned integer carried on wires, least-significant bit first.
/// max_value is a proven upper bound of the represented value and lets
/// builders drop provably-zero high bits.
struct NumberBundle {
  std::vector<WireRef> bits;
  std::uint64_t max_value = 0;

  std::size_t width() const { return bits.size(); }
};

/// Straightforward gate-order evaluation.
Bits eval_plain(const Circuit& circuit, std::span<const std::uint8_t> garbler_bits,
                std::span<const std::uint8_t> evaluator_bits);

/// Same as eval_plain but returns the value of every wire.
Bits eval_plain_wires(const Circuit& circuit, std::span<const std::uint8_t> garbler_bits,
                      std::span<const std::uint8_t> evaluator_bits);

GateCount count_gates(const Circuit& circuit);

/// Integer value of a bundle given a full wire assignment.
std::uint64_t bundle_value(const NumberBundle& bundle, std::span<const std::uint8_t> wire_values);

/// Text form: header `CIRC v1 <g> <e> <o>`, one gate per line, `OUT <ids>`.
std::string serialize_circuit(const Circuit& circuit);
Circuit parse_circuit(std::string_view text);

/// SHA-256 over a canonical binary encoding of the gate list and io lists.
std::array<std::uint8_t, 32> circuit_hash(const Circuit& circuit);

}  // namespace obnn
