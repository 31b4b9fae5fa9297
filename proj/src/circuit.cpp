#include "obnn/circuit.hpp"

#include <atomic>
#include <charconv>
#include <sstream>

#include "obnn/crypto.hpp"
#include "obnn/error.hpp"

namespace obnn {
namespace {

std::uint32_t next_tag() {
  static std::atomic<std::uint32_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

int arity(GateKind kind) {
  switch (kind) {
    case GateKind::kXor:
    case GateKind::kAnd:
      return 2;
    default:
      return 0;
  }
}

}  // namespace

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::kInput:
      return "INPUT";
    case GateKind::kConst0:
      return "CONST_0";
    case GateKind::kConst1:
      return "CONST_1";
    case GateKind::kXor:
      return "XOR";
    case GateKind::kAnd:
      return "AND";
  }
  return "?";
}

Circuit::Circuit() : tag_(next_tag()) {}

void Circuit::require_own(WireRef w) const {
  if (w.tag != tag_ || w.id >= gates_.size()) {
    throw StructuralError("wire " + std::to_string(w.id) + " does not belong to this circuit");
  }
}

WireRef Circuit::push(Gate g) {
  const auto id = static_cast<std::uint32_t>(gates_.size());
  if (g.kind == GateKind::kAnd) ++and_count_;
  gates_.push_back(g);
  return WireRef{id, tag_};
}

WireRef Circuit::wire(std::uint32_t id) const {
  if (id >= gates_.size()) throw StructuralError("wire id out of range");
  return WireRef{id, tag_};
}

WireRef Circuit::add_input(Party owner) {
  const WireRef w = push(Gate{GateKind::kInput, 0, 0, owner});
  (owner == Party::kGarbler ? garbler_inputs_ : evaluator_inputs_).push_back(w.id);
  return w;
}

WireRef Circuit::constant(bool value) {
  auto& slot = value ? const1_ : const0_;
  if (!slot) slot = push(Gate{value ? GateKind::kConst1 : GateKind::kConst0}).id;
  return WireRef{*slot, tag_};
}

WireRef Circuit::gate_xor(WireRef a, WireRef b) {
  require_own(a);
  require_own(b);
  return push(Gate{GateKind::kXor, a.id, b.id});
}

WireRef Circuit::gate_and(WireRef a, WireRef b) {
  require_own(a);
  require_own(b);
  return push(Gate{GateKind::kAnd, a.id, b.id});
}

WireRef Circuit::gate_not(WireRef a) {
  require_own(a);
  return gate_xor(a, constant(true));
}

WireRef Circuit::gate_or(WireRef a, WireRef b) {
  return gate_not(gate_and(gate_not(a), gate_not(b)));
}

void Circuit::add_output(WireRef w) {
  require_own(w);
  outputs_.push_back(w.id);
}

void Circuit::check() const {
  std::size_t g_in = 0;
  std::size_t e_in = 0;
  for (std::uint32_t id = 0; id < gates_.size(); ++id) {
    const Gate& g = gates_[id];
    if (arity(g.kind) == 2 && (g.in0 >= id || g.in1 >= id)) {
      throw StructuralError("gate " + std::to_string(id) + " reads a later wire");
    }
    if (g.kind == GateKind::kInput) {
      const auto& list = g.owner == Party::kGarbler ? garbler_inputs_ : evaluator_inputs_;
      std::size_t& pos = g.owner == Party::kGarbler ? g_in : e_in;
      if (pos >= list.size() || list[pos] != id) {
        throw StructuralError("input list out of order at wire " + std::to_string(id));
      }
      ++pos;
    }
  }
  if (g_in != garbler_inputs_.size() || e_in != evaluator_inputs_.size()) {
    throw StructuralError("input list does not match INPUT gates");
  }
  for (auto o : outputs_) {
    if (o >= gates_.size()) throw StructuralError("output refers to missing wire");
  }
}

Bits eval_plain_wires(const Circuit& circuit, std::span<const std::uint8_t> garbler_bits,
                      std::span<const std::uint8_t> evaluator_bits) {
  const auto& g_in = circuit.inputs(Party::kGarbler);
  const auto& e_in = circuit.inputs(Party::kEvaluator);
  if (garbler_bits.size() != g_in.size() || evaluator_bits.size() != e_in.size()) {
    throw StructuralError("input arity mismatch: expected " + std::to_string(g_in.size()) + "+" +
                          std::to_string(e_in.size()) + " bits, got " +
                          std::to_string(garbler_bits.size()) + "+" +
                          std::to_string(evaluator_bits.size()));
  }
  const auto gates = circuit.gates();
  Bits values(gates.size(), 0);
  std::size_t gi = 0;
  std::size_t ei = 0;
  for (std::size_t id = 0; id < gates.size(); ++id) {
    const Gate& g = gates[id];
    switch (g.kind) {
      case GateKind::kInput:
        values[id] = (g.owner == Party::kGarbler ? garbler_bits[gi++] : evaluator_bits[ei++]) & 1U;
        break;
      case GateKind::kConst0:
        values[id] = 0;
        break;
      case GateKind::kConst1:
        values[id] = 1;
        break;
      case GateKind::kXor:
        values[id] = values[g.in0] ^ values[g.in1];
        break;
      case GateKind::kAnd:
        values[id] = values[g.in0] & values[g.in1];
        break;
    }
  }
  return values;
}

Bits eval_plain(const Circuit& circuit, std::span<const std::uint8_t> garbler_bits,
                std::span<const std::uint8_t> evaluator_bits) {
  const Bits values = eval_plain_wires(circuit, garbler_bits, evaluator_bits);
  Bits out;
  out.reserve(circuit.outputs().size());
  for (auto o : circuit.outputs()) out.push_back(values[o]);
  return out;
}

GateCount count_gates(const Circuit& circuit) {
  GateCount c;
  for (const Gate& g : circuit.gates()) {
    if (g.kind == GateKind::kAnd) ++c.nonxor;
    if (g.kind == GateKind::kXor) ++c.xor_gates;
    if (g.kind == GateKind::kInput) ++c.inputs;
  }
  c.outputs = static_cast<std::int64_t>(circuit.outputs().size());
  return c;
}

std::uint64_t bundle_value(const NumberBundle& bundle, std::span<const std::uint8_t> wire_values) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < bundle.bits.size(); ++k) {
    v |= static_cast<std::uint64_t>(wire_values[bundle.bits[k].id] & 1U) << k;
  }
  return v;
}

std::string serialize_circuit(const Circuit& circuit) {
  std::ostringstream os;
  os << "CIRC v1 " << circuit.inputs(Party::kGarbler).size() << ' '
     << circuit.inputs(Party::kEvaluator).size() << ' ' << circuit.outputs().size() << '\n';
  const auto gates = circuit.gates();
  for (std::size_t id = 0; id < gates.size(); ++id) {
    const Gate& g = gates[id];
    os << id << ' ';
    switch (g.kind) {
      case GateKind::kInput:
        os << (g.owner == Party::kGarbler ? "INPUT_G" : "INPUT_E");
        break;
      case GateKind::kXor:
      case GateKind::kAnd:
        os << to_string(g.kind) << ' ' << g.in0 << ' ' << g.in1;
        break;
      default:
        os << to_string(g.kind);
        break;
    }
    os << '\n';
  }
  os << "OUT";
  for (auto o : circuit.outputs()) os << ' ' << o;
  os << '\n';
  return os.str();
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const auto end = text_.find('\n', pos_);
    line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
    pos_ = end == std::string_view::npos ? text_.size() : end + 1;
    ++line_no_;
    return true;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && line[k] == ' ') ++k;
    const std::size_t start = k;
    while (k < line.size() && line[k] != ' ') ++k;
    if (k > start) out.push_back(line.substr(start, k - start));
  }
  return out;
}

std::uint64_t parse_uint(std::string_view tok, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": expected integer, got '" +
                     std::string(tok) + "'");
  }
  return v;
}

}  // namespace

Circuit parse_circuit(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  if (!reader.next(line)) throw ParseError("empty circuit text");
  auto head = split(line);
  if (head.size() != 5 || head[0] != "CIRC" || head[1] != "v1") {
    throw ParseError("bad circuit header");
  }
  const auto n_g = parse_uint(head[2], 1);
  const auto n_e = parse_uint(head[3], 1);
  const auto n_o = parse_uint(head[4], 1);

  Circuit c;
  bool saw_out = false;
  while (reader.next(line)) {
    const auto toks = split(line);
    if (toks.empty()) continue;
    const std::size_t ln = reader.line_no();
    if (toks[0] == "OUT") {
      for (std::size_t k = 1; k < toks.size(); ++k) {
        c.add_output(c.wire(static_cast<std::uint32_t>(parse_uint(toks[k], ln))));
      }
      saw_out = true;
      break;
    }
    const auto id = parse_uint(toks[0], ln);
    if (id != c.wire_count()) {
      throw ParseError("line " + std::to_string(ln) + ": non-dense wire id");
    }
    if (toks.size() < 2) throw ParseError("line " + std::to_string(ln) + ": missing kind");
    const auto kind = toks[1];
    auto operand = [&](std::size_t k) {
      if (toks.size() != 4) throw ParseError("line " + std::to_string(ln) + ": bad arity");
      const auto v = parse_uint(toks[k], ln);
      if (v >= id) throw ParseError("line " + std::to_string(ln) + ": forward reference");
      return c.wire(static_cast<std::uint32_t>(v));
    };
    if (kind == "INPUT_G") {
      c.add_input(Party::kGarbler);
    } else if (kind == "INPUT_E") {
      c.add_input(Party::kEvaluator);
    } else if (kind == "CONST_0" || kind == "CONST_1") {
      const bool v = kind == "CONST_1";
      const auto before = c.wire_count();
      c.constant(v);
      if (c.wire_count() == before) {
        throw ParseError("line " + std::to_string(ln) + ": duplicate constant");
      }
    } else if (kind == "XOR") {
      c.gate_xor(operand(2), operand(3));
    } else if (kind == "AND") {
      c.gate_and(operand(2), operand(3));
    } else {
      throw ParseError("line " + std::to_string(ln) + ": unknown gate kind '" + std::string(kind) +
                       "'");
    }
  }
  if (!saw_out) throw ParseError("missing OUT line");
  if (c.inputs(Party::kGarbler).size() != n_g || c.inputs(Party::kEvaluator).size() != n_e ||
      c.outputs().size() != n_o) {
    throw ParseError("header arities do not match body");
  }
  return c;
}

std::array<std::uint8_t, 32> circuit_hash(const Circuit& circuit) {
  std::vector<std::uint8_t> buf;
  const auto gates = circuit.gates();
  buf.reserve(gates.size() * 9 + 64);
  auto put32 = [&buf](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  };
  put32(static_cast<std::uint32_t>(circuit.inputs(Party::kGarbler).size()));
  put32(static_cast<std::uint32_t>(circuit.inputs(Party::kEvaluator).size()));
  put32(static_cast<std::uint32_t>(gates.size()));
  for (const Gate& g : gates) {
    buf.push_back(static_cast<std::uint8_t>(g.kind));
    buf.push_back(static_cast<std::uint8_t>(g.owner));
    put32(g.in0);
    put32(g.in1);
  }
  put32(static_cast<std::uint32_t>(circuit.outputs().size()));
  for (auto o : circuit.outputs()) put32(o);
  return sha256(buf);
}

}  // namespace obnn
