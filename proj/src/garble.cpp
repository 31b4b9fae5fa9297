#include "obnn/garble.hpp"

#include <array>

#include "obnn/error.hpp"

namespace obnn {

std::size_t constant_count(const Circuit& circuit) {
  std::size_t n = 0;
  for (const Gate& g : circuit.gates()) {
    n += g.kind == GateKind::kConst0 || g.kind == GateKind::kConst1;
  }
  return n;
}

namespace {

std::uint64_t tweak(std::size_t gate, int half) { return 2 * static_cast<std::uint64_t>(gate) + half; }

/// Constant wires ordered CONST_0 then CONST_1.
std::vector<std::uint32_t> constant_wires(const Circuit& circuit) {
  std::vector<std::uint32_t> out;
  for (GateKind want : {GateKind::kConst0, GateKind::kConst1}) {
    const auto gates = circuit.gates();
    for (std::uint32_t id = 0; id < gates.size(); ++id) {
      if (gates[id].kind == want) out.push_back(id);
    }
  }
  return out;
}

}  // namespace

Garbler::Garbler(const Circuit& circuit, const Seed& seed)
    : circuit_(circuit), labels_(circuit.wire_count()) {
  Prg prg(seed);
  delta_ = prg.next();
  delta_.lo |= 1U;
  for (std::uint32_t id = 0; id < labels_.size(); ++id) {
    const GateKind k = circuit.gates()[id].kind;
    if (k == GateKind::kInput || k == GateKind::kConst0 || k == GateKind::kConst1) {
      labels_[id] = prg.next();
    }
  }
}

std::vector<Block> Garbler::garbler_active_labels(std::span<const std::uint8_t> bits) const {
  const auto& ins = circuit_.inputs(Party::kGarbler);
  if (bits.size() != ins.size()) {
    throw StructuralError("garbler input arity mismatch: expected " + std::to_string(ins.size()));
  }
  std::vector<Block> out;
  out.reserve(ins.size() + 2);
  for (std::size_t k = 0; k < ins.size(); ++k) out.push_back(labels_[ins[k]] ^ select(bits[k] != 0, delta_));
  for (std::uint32_t id : constant_wires(circuit_)) {
    const bool one = circuit_.gates()[id].kind == GateKind::kConst1;
    out.push_back(labels_[id] ^ select(one, delta_));
  }
  return out;
}

std::vector<std::pair<Block, Block>> Garbler::evaluator_label_pairs() const {
  std::vector<std::pair<Block, Block>> out;
  for (std::uint32_t id : circuit_.inputs(Party::kEvaluator)) {
    out.emplace_back(labels_[id], labels_[id] ^ delta_);
  }
  return out;
}

std::size_t Garbler::garble_some(std::vector<Block>& tables, std::size_t max_ands) {
  const auto gates = circuit_.gates();
  std::size_t ands = 0;
  while (next_gate_ < gates.size() && ands < max_ands) {
    const std::size_t id = next_gate_++;
    const Gate& g = gates[id];
    switch (g.kind) {
      case GateKind::kInput:
      case GateKind::kConst0:
      case GateKind::kConst1:
        break;
      case GateKind::kXor:
        labels_[id] = labels_[g.in0] ^ labels_[g.in1];
        break;
      case GateKind::kAnd: {
        const Block a0 = labels_[g.in0];
        const Block b0 = labels_[g.in1];
        const bool pa = a0.lsb();
        const bool pb = b0.lsb();
        const std::array<Block, 4> xs = {a0, a0 ^ delta_, b0, b0 ^ delta_};
        const std::array<std::uint64_t, 4> tw = {tweak(id, 0), tweak(id, 0), tweak(id, 1),
                                                 tweak(id, 1)};
        std::array<Block, 4> h;
        hash_.batch(xs, tw, h);
        const Block tg = h[0] ^ h[1] ^ select(pb, delta_);
        const Block wg = h[0] ^ select(pa, tg);
        const Block te = h[2] ^ h[3] ^ a0;
        const Block we = h[2] ^ select(pb, te ^ a0);
        labels_[id] = wg ^ we;
        tables.push_back(tg);
        tables.push_back(te);
        ++ands;
        break;
      }
    }
  }
  return ands;
}

Bits Garbler::decode_bits() const {
  if (!done()) throw StructuralError("decode bits requested before garbling finished");
  Bits out;
  for (std::uint32_t id : circuit_.outputs()) out.push_back(labels_[id].lsb() ? 1 : 0);
  return out;
}

Evaluator::Evaluator(const Circuit& circuit, std::span<const Block> garbler_labels,
                     std::span<const Block> evaluator_labels)
    : circuit_(circuit), labels_(circuit.wire_count()) {
  const auto& g_in = circuit.inputs(Party::kGarbler);
  const auto& e_in = circuit.inputs(Party::kEvaluator);
  const std::vector<std::uint32_t> consts = constant_wires(circuit);
  if (garbler_labels.size() != g_in.size() + consts.size() || evaluator_labels.size() != e_in.size()) {
    throw ProtocolError("input label count does not match the circuit");
  }
  for (std::size_t k = 0; k < g_in.size(); ++k) labels_[g_in[k]] = garbler_labels[k];
  for (std::size_t k = 0; k < consts.size(); ++k) labels_[consts[k]] = garbler_labels[g_in.size() + k];
  for (std::size_t k = 0; k < e_in.size(); ++k) labels_[e_in[k]] = evaluator_labels[k];
  std::size_t none = 0;
  advance({}, none);
}

void Evaluator::feed(std::span<const Block> tables) {
  if (tables.size() % 2 != 0) throw ProtocolError("odd number of table blocks");
  std::size_t used = 0;
  advance(tables, used);
  if (used != tables.size()) throw ProtocolError("more AND tables than AND gates");
}

void Evaluator::advance(std::span<const Block> tables, std::size_t& used) {
  const auto gates = circuit_.gates();
  while (next_gate_ < gates.size()) {
    const std::size_t id = next_gate_;
    const Gate& g = gates[id];
    if (g.kind == GateKind::kXor) {
      labels_[id] = labels_[g.in0] ^ labels_[g.in1];
    } else if (g.kind == GateKind::kAnd) {
      if (used + 2 > tables.size()) return;
      const Block tg = tables[used];
      const Block te = tables[used + 1];
      used += 2;
      const Block a = labels_[g.in0];
      const Block b = labels_[g.in1];
      const std::array<Block, 2> xs = {a, b};
      const std::array<std::uint64_t, 2> tw = {tweak(id, 0), tweak(id, 1)};
      std::array<Block, 2> h;
      hash_.batch(xs, tw, h);
      labels_[id] = h[0] ^ select(a.lsb(), tg) ^ h[1] ^ select(b.lsb(), te ^ a);
    }
    ++next_gate_;
  }
}

std::vector<Block> Evaluator::output_labels() const {
  if (!done()) throw ProtocolError("AND tables missing: evaluation incomplete");
  std::vector<Block> out;
  for (std::uint32_t id : circuit_.outputs()) out.push_back(labels_[id]);
  return out;
}

GarbledArtifacts garble(const Circuit& circuit, const Seed& seed) {
  Garbler g(circuit, seed);
  GarbledArtifacts a;
  a.delta = g.delta();
  for (std::uint32_t id : circuit.inputs(Party::kGarbler)) a.garbler_zero.push_back(g.zero_label(id));
  for (std::uint32_t id : circuit.inputs(Party::kEvaluator)) a.evaluator_zero.push_back(g.zero_label(id));
  const std::vector<Block> consts =
      g.garbler_active_labels(Bits(circuit.inputs(Party::kGarbler).size(), 0));
  a.const_labels.assign(consts.begin() + static_cast<std::ptrdiff_t>(a.garbler_zero.size()), consts.end());
  a.and_tables.reserve(2 * static_cast<std::size_t>(circuit.and_count()));
  g.garble_some(a.and_tables, SIZE_MAX);
  a.decode_bits = g.decode_bits();
  return a;
}

std::vector<Block> encode_inputs(std::span<const Block> zero_labels, const Block& delta,
                                 std::span<const std::uint8_t> bits) {
  if (zero_labels.size() != bits.size()) throw StructuralError("encode_inputs: arity mismatch");
  std::vector<Block> out;
  out.reserve(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) out.push_back(zero_labels[k] ^ select(bits[k] != 0, delta));
  return out;
}

std::vector<Block> evaluate(const Circuit& circuit, const GarbledArtifacts& artifacts,
                            std::span<const Block> garbler_labels,
                            std::span<const Block> evaluator_labels) {
  std::vector<Block> with_consts(garbler_labels.begin(), garbler_labels.end());
  with_consts.insert(with_consts.end(), artifacts.const_labels.begin(), artifacts.const_labels.end());
  Evaluator e(circuit, with_consts, evaluator_labels);
  e.feed(artifacts.and_tables);
  return e.output_labels();
}

Bits decode(std::span<const Block> output_labels, std::span<const std::uint8_t> decode_bits) {
  if (output_labels.size() != decode_bits.size()) throw ProtocolError("decode table size mismatch");
  Bits out(output_labels.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (output_labels[k].lsb() ? 1 : 0) ^ decode_bits[k];
  return out;
}

}  // namespace obnn
