#include "obnn/verify.hpp"

#include "obnn/compiler.hpp"
#include "obnn/crypto.hpp"
#include "obnn/garble.hpp"
#include "obnn/synth.hpp"

namespace obnn {

std::string unit_coordinates(const Shape& shape, std::size_t index) {
  const std::size_t ch = shape.channels();
  const std::size_t c = index % ch;
  const std::size_t pos = index / ch;
  if (shape.dim == 1) return "position " + std::to_string(pos) + ", channel " + std::to_string(c);
  return "row " + std::to_string(pos / shape.h2) + ", column " + std::to_string(pos % shape.h2) +
         ", channel " + std::to_string(c);
}

namespace {

Model corrupted(const Model& model) {
  Model m = model;
  for (std::size_t i = 1; i < m.layers.size(); ++i) {
    Layer& l = m.layers[i];
    if (l.kind != LayerKind::kBnSign) continue;
    const Layer& prev = m.layers[i - 1];
    if (!prev.weighted()) continue;
    const std::int64_t lv = static_cast<std::int64_t>(prev.weights.row_nonzero(0));
    // Flip the neuron to always or never firing, whichever differs more.
    l.thresholds[0] = l.thresholds[0] <= lv / 2 ? static_cast<std::int32_t>(lv + 1) : 0;
    return m;
  }
  return m;
}

Seed trial_seed(std::uint64_t seed, std::size_t trial, ObcKind kind) {
  std::vector<std::uint8_t> buf;
  for (std::uint64_t v : {seed, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(kind)}) {
    for (int k = 0; k < 8; ++k) buf.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  return sha256(buf);
}

}  // namespace

VerifyReport verify_model(const Model& model, const VerifyOptions& opts) {
  const std::vector<Shape> shapes = validate(model);
  const Model compiled_from = opts.corrupt_threshold ? corrupted(model) : model;
  VerifyReport r;
  r.trials = opts.trials;
  auto record = [&](Mismatch m) {
    if (r.mismatches.size() < opts.max_mismatches) r.mismatches.push_back(std::move(m));
  };
  for (ObcKind kind : opts.kinds) {
    const CompiledModel cm = compile_model(compiled_from, kind);
    for (std::size_t t = 0; t < opts.trials; ++t) {
      const Bits x = random_input(model, opts.seed * 1000003ULL + t);
      const PlainTrace ref = plain_trace(model, x);
      const Bits wires = eval_plain_wires(cm.circuit, cm.io.garbler_bits, x);
      bool layer_ok = true;
      for (std::size_t li = 0; li < cm.io.activations.size() && layer_ok; ++li) {
        const auto& acts = cm.io.activations[li];
        for (std::size_t u = 0; u < acts.size(); ++u) {
          ++r.checks;
          if (wires[acts[u].id] != ref.activations[li][u]) {
            record({kind, t, "compiled", li, u, unit_coordinates(shapes[li + 1], u)});
            layer_ok = false;
            break;
          }
        }
      }
      std::vector<std::int64_t> scores;
      for (const NumberBundle& b : cm.io.scores) scores.push_back(static_cast<std::int64_t>(bundle_value(b, wires)));
      ++r.checks;
      if (layer_ok && scores != ref.scores) {
        for (std::size_t u = 0; u < scores.size(); ++u) {
          if (scores[u] != ref.scores[u]) {
            record({kind, t, "compiled", model.layers.size() - 1, u, "class " + std::to_string(u)});
            break;
          }
        }
      }
      const GarbledArtifacts art = garble(cm.circuit, trial_seed(opts.seed, t, kind));
      const Bits out = decode(evaluate(cm.circuit, art, encode_inputs(art.garbler_zero, art.delta, cm.io.garbler_bits),
                                       encode_inputs(art.evaluator_zero, art.delta, x)),
                              art.decode_bits);
      const std::vector<std::int64_t> garbled = decode_scores(cm.io, out);
      ++r.checks;
      if (garbled != ref.scores) {
        for (std::size_t u = 0; u < garbled.size(); ++u) {
          if (garbled[u] != ref.scores[u]) {
            record({kind, t, "garbled", model.layers.size() - 1, u, "class " + std::to_string(u)});
            break;
          }
        }
      }
    }
  }
  return r;
}

}  // namespace obnn
