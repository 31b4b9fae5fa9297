#include "obnn/compiler.hpp"

#include <optional>

#include "obnn/error.hpp"

namespace obnn {
namespace {

/// A bit that is either a public constant or a wire.
struct MaybeConst {
  std::optional<WireRef> wire;
  bool value = false;
};

}  // namespace

std::vector<WireRef> xnor_vdp(Circuit& c, std::span<const WireRef> activations,
                              std::span<const WireRef> weight_signs,
                              std::span<const std::uint8_t> mask) {
  if (activations.size() != weight_signs.size() || activations.size() != mask.size()) {
    throw StructuralError("xnor_vdp: length mismatch");
  }
  std::vector<WireRef> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) out.push_back(c.gate_not(c.gate_xor(activations[i], weight_signs[i])));
  }
  if (out.empty()) throw ValidationError("xnor_vdp: no nonzero weights");
  return out;
}

WireRef compare_ge_const(Circuit& c, const NumberBundle& x, std::int64_t t) {
  if (t <= 0) return c.constant(true);
  const std::size_t w = x.width();
  if ((w < 63 && t >= (std::int64_t{1} << w)) || static_cast<std::uint64_t>(t) > x.max_value) {
    return c.constant(false);
  }
  // borrow_{i+1} of x - t: t_i = 0 -> !x_i & b; t_i = 1 -> !x_i | b.
  MaybeConst borrow;
  for (std::size_t i = 0; i < w; ++i) {
    const bool ti = ((static_cast<std::uint64_t>(t) >> i) & 1U) != 0;
    if (!borrow.wire) {
      // t_i = 0 with borrow 0 stays 0; t_i = 1 with borrow 1 stays 1.
      if (ti != borrow.value) borrow.wire = c.gate_not(x.bits[i]);
      continue;
    }
    const WireRef nx = c.gate_not(x.bits[i]);
    borrow.wire = ti ? c.gate_or(nx, *borrow.wire) : c.gate_and(nx, *borrow.wire);
  }
  if (!borrow.wire) return c.constant(!borrow.value);
  return c.gate_not(*borrow.wire);
}

WireRef compile_maxpool(Circuit& c, std::span<const WireRef> window) {
  if (window.empty()) throw StructuralError("compile_maxpool: empty window");
  std::vector<WireRef> level(window.begin(), window.end());
  while (level.size() > 1) {
    std::vector<WireRef> next;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(c.gate_or(level[i], level[i + 1]));
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level.front();
}

namespace {

struct PendingUnit {
  NumberBundle count;
  std::size_t lv = 0;
  std::size_t padded = 0;
};

class ModelCompiler {
 public:
  ModelCompiler(const Model& model, ObcKind obc) : model_(model), obc_(obc) {}

  CompiledModel run() {
    const std::vector<Shape> shapes = validate(model_);
    out_.io.activations.resize(model_.layers.size());
    for (std::size_t i = 0; i < model_.input.size(); ++i) {
      acts_.push_back(c().add_input(Party::kEvaluator));
    }
    for (std::size_t i = 0; i < model_.layers.size(); ++i) {
      const Layer& l = model_.layers[i];
      LayerCost cost;
      cost.layer = i;
      cost.kind = l.kind;
      const std::int64_t before = c().and_count();
      switch (l.kind) {
        case LayerKind::kConv1d:
        case LayerKind::kConv2d:
        case LayerKind::kFc:
        case LayerKind::kOutput:
          weighted(l, shapes[i], shapes[i + 1], cost);
          cost.popcount = c().and_count() - before;
          break;
        case LayerKind::kBnSign:
          threshold(l);
          cost.units = static_cast<std::int64_t>(acts_.size());
          cost.comparator = c().and_count() - before;
          out_.io.activations[i] = acts_;
          break;
        case LayerKind::kMaxPool:
          pool(l, shapes[i], shapes[i + 1]);
          cost.units = static_cast<std::int64_t>(acts_.size());
          cost.pool = c().and_count() - before;
          out_.io.activations[i] = acts_;
          break;
      }
      out_.io.layers.push_back(cost);
    }
    for (PendingUnit& u : pending_) {
      for (const WireRef& b : u.count.bits) c().add_output(b);
      out_.io.scores.push_back(std::move(u.count));
    }
    return std::move(out_);
  }

 private:
  Circuit& c() { return out_.circuit; }

  std::vector<WireRef> weight_inputs(const TernaryWeights& w) {
    std::vector<WireRef> signs(w.sign.size(), WireRef{});
    for (std::size_t k = 0; k < w.sign.size(); ++k) {
      if (w.mask[k] == 0) continue;
      signs[k] = c().add_input(Party::kGarbler);
      out_.io.garbler_bits.push_back(w.sign[k]);
    }
    return signs;
  }

  void emit_unit(std::span<const WireRef> xs, std::span<const WireRef> ws,
                 std::span<const std::uint8_t> mask, std::size_t padded, LayerCost& cost) {
    PendingUnit u;
    u.padded = padded;
    std::size_t lv = 0;
    for (std::uint8_t m : mask) lv += m;
    u.lv = lv;
    if (lv == 0) {
      u.count = popcount(c(), obc_, {});
    } else {
      const std::vector<WireRef> bits = xnor_vdp(c(), xs, ws, mask);
      u.count = popcount(c(), obc_, bits);
    }
    ++cost.units;
    cost.popcount_inputs += static_cast<std::int64_t>(lv);
    cost.max_fan_in = std::max(cost.max_fan_in, static_cast<std::int64_t>(lv));
    pending_.push_back(std::move(u));
  }

  void weighted(const Layer& l, const Shape& in, const Shape& out, LayerCost& cost) {
    const TernaryWeights& w = l.weights;
    const std::vector<WireRef> signs = weight_inputs(w);
    pending_.clear();
    std::vector<WireRef> xs(w.fan_in);
    std::vector<WireRef> ws(w.fan_in);
    Bits mask(w.fan_in);

    if (l.kind == LayerKind::kFc || l.kind == LayerKind::kOutput) {
      for (std::size_t u = 0; u < w.units; ++u) {
        emit_unit(acts_, std::span(signs).subspan(u * w.fan_in, w.fan_in),
                  std::span(w.mask).subspan(u * w.fan_in, w.fan_in), 0, cost);
      }
      return;
    }

    const std::int64_t ch = in.channels();
    const std::int64_t kw = l.kind == LayerKind::kConv1d ? 1 : l.kernel_w;
    const std::int64_t pad_i = conv_pad_before(in.h1, l.kernel_h, l.stride, l.padding);
    const std::int64_t pad_j =
        l.kind == LayerKind::kConv1d ? 0 : conv_pad_before(in.h2, l.kernel_w, l.stride, l.padding);
    const std::int64_t in_rows = in.h1;
    const std::int64_t in_cols = l.kind == LayerKind::kConv1d ? 1 : in.h2;
    const std::int64_t out_rows = out.h1;
    const std::int64_t out_cols = l.kind == LayerKind::kConv1d ? 1 : out.h2;

    for (std::int64_t oi = 0; oi < out_rows; ++oi) {
      for (std::int64_t oj = 0; oj < out_cols; ++oj) {
        for (std::size_t f = 0; f < l.filters; ++f) {
          std::size_t padded = 0;
          for (std::int64_t a = 0; a < l.kernel_h; ++a) {
            for (std::int64_t b = 0; b < kw; ++b) {
              const std::int64_t pi = oi * l.stride - pad_i + a;
              const std::int64_t pj = oj * l.stride - pad_j + b;
              const bool outside = pi < 0 || pi >= in_rows || pj < 0 || pj >= in_cols;
              for (std::int64_t ci = 0; ci < ch; ++ci) {
                const auto idx = static_cast<std::size_t>((a * kw + b) * ch + ci);
                const std::size_t wk = f * w.fan_in + idx;
                ws[idx] = signs[wk];
                if (outside) {
                  padded += w.mask[wk];
                  mask[idx] = 0;
                  xs[idx] = WireRef{};
                } else {
                  mask[idx] = w.mask[wk];
                  xs[idx] = acts_[static_cast<std::size_t>((pi * in_cols + pj) * ch + ci)];
                }
              }
            }
          }
          emit_unit(xs, ws, mask, padded, cost);
        }
      }
    }
  }

  void threshold(const Layer& l) {
    const std::size_t units = l.thresholds.size();
    std::vector<WireRef> next;
    next.reserve(pending_.size());
    for (std::size_t k = 0; k < pending_.size(); ++k) {
      const PendingUnit& u = pending_[k];
      const std::int64_t t = effective_threshold(l.thresholds[k % units], u.padded, u.lv);
      next.push_back(compare_ge_const(c(), u.count, t));
    }
    pending_.clear();
    acts_ = std::move(next);
  }

  void pool(const Layer& l, const Shape& in, const Shape& out) {
    const std::size_t ch = in.channels();
    std::vector<WireRef> next(out.size());
    std::vector<WireRef> window;
    const std::size_t rows = out.h1;
    const std::size_t cols = in.dim == 1 ? 1 : out.h2;
    const std::size_t in_cols = in.dim == 1 ? 1 : in.h2;
    const std::size_t pw = in.dim == 1 ? 1 : l.pool;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t ci = 0; ci < ch; ++ci) {
          window.clear();
          for (std::size_t a = 0; a < l.pool; ++a) {
            for (std::size_t b = 0; b < pw; ++b) {
              window.push_back(acts_[((i * l.pool + a) * in_cols + (j * pw + b)) * ch + ci]);
            }
          }
          next[(i * cols + j) * ch + ci] = compile_maxpool(c(), window);
        }
      }
    }
    acts_ = std::move(next);
  }

  const Model& model_;
  ObcKind obc_;
  CompiledModel out_;
  std::vector<WireRef> acts_;
  std::vector<PendingUnit> pending_;
};

}  // namespace

CompiledModel compile_model(const Model& model, ObcKind obc) { return ModelCompiler(model, obc).run(); }

std::vector<std::int64_t> decode_scores(const IoMap& io, std::span<const std::uint8_t> outputs) {
  std::vector<std::int64_t> scores;
  std::size_t pos = 0;
  for (const NumberBundle& b : io.scores) {
    if (pos + b.width() > outputs.size()) throw ValidationError("decode_scores: too few output bits");
    std::int64_t v = 0;
    for (std::size_t k = 0; k < b.width(); ++k) v |= std::int64_t{outputs[pos + k] != 0} << k;
    pos += b.width();
    scores.push_back(v);
  }
  if (pos != outputs.size()) throw ValidationError("decode_scores: extra output bits");
  return scores;
}

}  // namespace obnn
