#include "obnn/session.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <set>

#include <nlohmann/json.hpp>

#include "obnn/error.hpp"
#include "obnn/garble.hpp"

namespace obnn {
namespace {

void claim_seed(const Seed& seed) {
  static std::mutex mu;
  static std::set<Digest> used;
  const Digest d = sha256(seed);
  std::lock_guard lock(mu);
  if (!used.insert(d).second) throw ProtocolError("garbling seed reused across sessions");
}

std::vector<std::uint8_t> meta_payload(const Circuit& c) {
  std::vector<std::uint8_t> out;
  const auto h = circuit_hash(c);
  out.insert(out.end(), h.begin(), h.end());
  for (std::size_t v : {c.inputs(Party::kGarbler).size(), c.inputs(Party::kEvaluator).size(),
                        c.outputs().size()}) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  return out;
}

std::vector<std::uint8_t> blocks_to_bytes(std::span<const Block> blocks) {
  std::vector<std::uint8_t> out(blocks.size() * Block::kBytes);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    blocks[k].store(std::span<std::uint8_t, 16>(out.data() + 16 * k, 16));
  }
  return out;
}

std::vector<Block> bytes_to_blocks(std::span<const std::uint8_t> bytes, const char* what) {
  if (bytes.size() % Block::kBytes != 0) throw ProtocolError(std::string(what) + ": ragged payload");
  std::vector<Block> out(bytes.size() / Block::kBytes);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = Block::load(std::span<const std::uint8_t, 16>(bytes.data() + 16 * k, 16));
  }
  return out;
}

std::vector<std::uint8_t> pack_decode(const Bits& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < bits.size(); ++k) out[k / 8] |= static_cast<std::uint8_t>(bits[k] << (k % 8));
  return out;
}

Bits unpack_decode(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() != (count + 7) / 8) throw ProtocolError("DECODE_TABLE has the wrong size");
  Bits out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = (bytes[k / 8] >> (k % 8)) & 1U;
  return out;
}

/// Frame IO that files payload bytes under a report category.
class Framer {
 public:
  Framer(Channel& ch, SessionReport& r) : ch_(ch), r_(r) {}

  void send(FrameType t, std::span<const std::uint8_t> payload) {
    write_frame(ch_, t, payload);
    account(t, payload.size());
  }
  std::vector<std::uint8_t> recv(FrameType t) {
    auto payload = read_frame(ch_, t);
    account(t, payload.size());
    return payload;
  }

 private:
  void account(FrameType t, std::size_t n) {
    r_.header_bytes += kFrameHeaderBytes;
    ++r_.frames;
    switch (t) {
      case FrameType::kCircuitMeta: r_.meta_bytes += n; break;
      case FrameType::kOtMsg: r_.ot_bytes += n; break;
      case FrameType::kGarblerLabels: r_.label_bytes += n; break;
      case FrameType::kAndTables: r_.table_bytes += n; break;
      case FrameType::kDecodeTable: r_.decode_bytes += n; break;
      case FrameType::kOutputAck: r_.ack_bytes += n; break;
    }
  }
  Channel& ch_;
  SessionReport& r_;
};

void finish_report(SessionReport& r, const Channel& ch, const Circuit& c,
                   std::chrono::steady_clock::time_point start) {
  const GateCount gc = count_gates(c);
  r.nonxor = gc.nonxor;
  r.xor_gates = gc.xor_gates;
  r.bytes_sent = ch.bytes_sent();
  r.bytes_received = ch.bytes_received();
  r.rounds = ch.rounds();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string to_json(const SessionReport& r) {
  nlohmann::json j = {{"nonxor", r.nonxor},
                      {"xor", r.xor_gates},
                      {"bytes_sent", r.bytes_sent},
                      {"bytes_received", r.bytes_received},
                      {"rounds", r.rounds},
                      {"wall_ms", r.wall_ms},
                      {"sections",
                       {{"meta", r.meta_bytes},
                        {"ot", r.ot_bytes},
                        {"labels", r.label_bytes},
                        {"and_tables", r.table_bytes},
                        {"decode", r.decode_bytes},
                        {"ack", r.ack_bytes},
                        {"headers", r.header_bytes}}}};
  return j.dump();
}

SessionReport run_garbler(Channel& ch, const Circuit& circuit,
                          std::span<const std::uint8_t> garbler_bits, const SessionOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const Seed seed = opts.seed.value_or(random_seed());
  claim_seed(seed);
  SessionReport report;
  Framer io(ch, report);
  Garbler garbler(circuit, seed);
  const std::vector<Block> g_labels = garbler.garbler_active_labels(garbler_bits);

  // Flight 1: identity and OT setup.
  const std::vector<std::uint8_t> meta = meta_payload(circuit);
  io.send(FrameType::kCircuitMeta, meta);
  auto ot = make_ot_sender(opts.ot);
  io.send(FrameType::kOtMsg, ot->setup());

  // Flight 2: evaluator identity and OT choices.
  const auto peer_meta = io.recv(FrameType::kCircuitMeta);
  if (peer_meta != meta) throw ProtocolError("circuit hash mismatch between garbler and evaluator");
  const auto choose = io.recv(FrameType::kOtMsg);

  // Flight 3: OT answers, labels, streamed tables, decode bits.
  const auto pairs = garbler.evaluator_label_pairs();
  io.send(FrameType::kOtMsg, ot->transfer(choose, pairs));
  io.send(FrameType::kGarblerLabels, blocks_to_bytes(g_labels));
  std::vector<Block> tables;
  const std::size_t per_frame = std::max<std::size_t>(opts.ands_per_frame, 1);
  tables.reserve(2 * per_frame);
  bool sent_tables = false;
  while (!garbler.done()) {
    tables.clear();
    garbler.garble_some(tables, per_frame);
    if (!tables.empty() || (!sent_tables && garbler.done())) {
      io.send(FrameType::kAndTables, blocks_to_bytes(tables));
      sent_tables = true;
    }
  }
  if (!sent_tables) io.send(FrameType::kAndTables, {});
  io.send(FrameType::kDecodeTable, pack_decode(garbler.decode_bits()));

  // Flight 4: acknowledgement.
  io.recv(FrameType::kOutputAck);
  finish_report(report, ch, circuit, start);
  return report;
}

EvaluatorResult run_evaluator(Channel& ch, const Circuit& circuit,
                              std::span<const std::uint8_t> evaluator_bits,
                              const SessionOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const auto& e_in = circuit.inputs(Party::kEvaluator);
  if (evaluator_bits.size() != e_in.size()) {
    throw StructuralError("evaluator input arity mismatch: expected " + std::to_string(e_in.size()));
  }
  EvaluatorResult result;
  SessionReport& report = result.report;
  Framer io(ch, report);

  const std::vector<std::uint8_t> meta = meta_payload(circuit);
  const auto peer_meta = io.recv(FrameType::kCircuitMeta);
  const auto setup = io.recv(FrameType::kOtMsg);

  io.send(FrameType::kCircuitMeta, meta);
  if (peer_meta != meta) {
    ch.flush();
    throw ProtocolError("circuit hash mismatch between garbler and evaluator");
  }
  auto ot = make_ot_receiver(opts.ot);
  io.send(FrameType::kOtMsg, ot->choose(setup, evaluator_bits));

  const std::vector<Block> e_labels = ot->finish(io.recv(FrameType::kOtMsg));
  const std::vector<Block> g_labels =
      bytes_to_blocks(io.recv(FrameType::kGarblerLabels), "GARBLER_LABELS");
  Evaluator evaluator(circuit, g_labels, e_labels);
  const auto total_ands = static_cast<std::uint64_t>(circuit.and_count());
  std::uint64_t seen = 0;
  do {
    const std::vector<Block> tables = bytes_to_blocks(io.recv(FrameType::kAndTables), "AND_TABLES");
    seen += tables.size() / 2;
    if (seen > total_ands) throw ProtocolError("more AND tables than AND gates");
    evaluator.feed(tables);
  } while (seen < total_ands);
  const auto decode_payload = io.recv(FrameType::kDecodeTable);
  const Bits decode_bits = unpack_decode(decode_payload, circuit.outputs().size());
  result.outputs = decode(evaluator.output_labels(), decode_bits);

  io.send(FrameType::kOutputAck, {});
  ch.flush();
  finish_report(report, ch, circuit, start);
  return result;
}

}  // namespace obnn
