#include "obnn/synth.hpp"

#include <charconv>
#include <random>

#include "obnn/error.hpp"

namespace obnn {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) return out;
    start = p + 1;
  }
}

std::uint32_t to_u32(std::string_view s, std::string_view context) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) {
    throw ParseError("expected a positive integer in '" + std::string(context) + "'");
  }
  return v;
}

}  // namespace

Shape parse_shape(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2 && parts.size() != 3) throw ParseError("shape must be HxC or HxWxC");
  Shape s;
  s.dim = static_cast<int>(parts.size()) - 1;
  s.h1 = to_u32(parts[0], text);
  s.h2 = to_u32(parts[1], text);
  s.h3 = parts.size() == 3 ? to_u32(parts[2], text) : 1;
  return s;
}

std::vector<PlanStep> parse_plan(std::string_view text) {
  std::vector<PlanStep> plan;
  for (std::string_view item : split(text, ',')) {
    const auto f = split(item, ':');
    PlanStep st;
    const auto tail = [&](std::size_t from) {
      if (f.size() > from) st.stride = to_u32(f[from], item);
      if (f.size() > from + 1) {
        if (f[from + 1] == "same") {
          st.padding = Padding::kSame;
        } else if (f[from + 1] == "valid") {
          st.padding = Padding::kValid;
        } else {
          throw ParseError("padding must be same or valid in '" + std::string(item) + "'");
        }
      }
      if (f.size() > from + 2) throw ParseError("too many fields in '" + std::string(item) + "'");
    };
    if (f[0] == "conv1d" && f.size() >= 3) {
      st.kind = LayerKind::kConv1d;
      st.a = to_u32(f[1], item);
      st.kh = to_u32(f[2], item);
      tail(3);
    } else if (f[0] == "conv2d" && f.size() >= 4) {
      st.kind = LayerKind::kConv2d;
      st.a = to_u32(f[1], item);
      st.kh = to_u32(f[2], item);
      st.kw = to_u32(f[3], item);
      tail(4);
    } else if ((f[0] == "fc" || f[0] == "pool" || f[0] == "out") && f.size() == 2) {
      st.kind = f[0] == "fc" ? LayerKind::kFc : f[0] == "pool" ? LayerKind::kMaxPool : LayerKind::kOutput;
      st.a = to_u32(f[1], item);
    } else {
      throw ParseError("bad layer step '" + std::string(item) + "'");
    }
    plan.push_back(st);
  }
  return plan;
}

Model random_model(const Shape& input, const std::vector<PlanStep>& plan, double sparsity,
                   std::uint64_t seed) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ValidationError("sparsity must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution zero(sparsity);
  Model m;
  m.input = input;
  Shape shape = input;
  const auto make_weights = [&](std::size_t units, std::size_t fan_in) {
    TernaryWeights w;
    w.units = units;
    w.fan_in = fan_in;
    w.sign.resize(units * fan_in);
    w.mask.resize(units * fan_in);
    for (std::size_t k = 0; k < w.sign.size(); ++k) {
      w.mask[k] = zero(rng) ? 0 : 1;
      w.sign[k] = static_cast<std::uint8_t>(rng() & 1U);
    }
    for (std::size_t u = 0; u < units; ++u) {
      if (w.row_nonzero(u) == 0) w.mask[u * fan_in + rng() % fan_in] = 1;
    }
    return w;
  };

  for (const PlanStep& st : plan) {
    Layer l;
    l.kind = st.kind;
    switch (st.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kConv2d:
        l.filters = st.a;
        l.kernel_h = st.kh;
        l.kernel_w = st.kind == LayerKind::kConv2d ? st.kw : 0;
        l.stride = st.stride;
        l.padding = st.padding;
        l.weights = make_weights(st.a, std::size_t{st.kh} * (st.kind == LayerKind::kConv2d ? st.kw : 1) *
                                           shape.channels());
        break;
      case LayerKind::kFc:
      case LayerKind::kOutput:
        l.fan_in = static_cast<std::uint32_t>(shape.size());
        l.fan_out = st.a;
        l.weights = make_weights(st.a, shape.size());
        break;
      case LayerKind::kMaxPool:
        l.pool = st.a;
        break;
      case LayerKind::kBnSign:
        throw ValidationError("BN_SIGN is implied by the plan");
    }
    shape = output_shape(shape, l, m.layers.size());
    m.layers.push_back(l);
    if (l.weighted() && l.kind != LayerKind::kOutput) {
      Layer bn;
      bn.kind = LayerKind::kBnSign;
      for (std::size_t u = 0; u < l.weights.units; ++u) {
        const auto lv = static_cast<std::int64_t>(l.weights.row_nonzero(u));
        bn.thresholds.push_back(static_cast<std::int32_t>(
            std::uniform_int_distribution<std::int64_t>(0, lv + 1)(rng)));
      }
      m.layers.push_back(std::move(bn));
    }
  }
  validate(m);
  return m;
}

Bits random_input(const Model& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bits x(model.input.size());
  for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1U);
  return x;
}

}  // namespace obnn
