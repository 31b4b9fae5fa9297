#include "obnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "obnn/error.hpp"

namespace obnn {
namespace {

constexpr std::uint16_t kVersion = 1;

std::string layer_tag(std::size_t index, LayerKind kind) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(kind)) + ")";
}

[[noreturn]] void fail(std::size_t index, LayerKind kind, const std::string& what) {
  throw ValidationError(layer_tag(index, kind) + ": " + what);
}

std::size_t conv_fan_in(const Layer& l, const Shape& in) {
  return l.kind == LayerKind::kConv1d ? std::size_t{l.kernel_h} * in.channels()
                                      : std::size_t{l.kernel_h} * l.kernel_w * in.channels();
}

Shape next_shape_impl(const Shape& in, const Layer& l, std::size_t index) {
  switch (l.kind) {
    case LayerKind::kConv1d:
    case LayerKind::kConv2d: {
      const bool one_d = l.kind == LayerKind::kConv1d;
      if (in.dim != (one_d ? 1 : 2)) fail(index, l.kind, "input is " + to_string(in));
      if (l.filters == 0 || l.kernel_h == 0 || (!one_d && l.kernel_w == 0) || l.stride == 0) {
        fail(index, l.kind, "filters, kernel and stride must be >= 1");
      }
      if (l.padding != Padding::kValid && l.padding != Padding::kSame) {
        fail(index, l.kind, "bad padding mode");
      }
      try {
        if (one_d) return Shape{1, conv_out_len(in.h1, l.kernel_h, l.stride, l.padding), l.filters, 1};
        return Shape{2, conv_out_len(in.h1, l.kernel_h, l.stride, l.padding),
                     conv_out_len(in.h2, l.kernel_w, l.stride, l.padding), l.filters};
      } catch (const ValidationError& e) {
        fail(index, l.kind, e.what());
      }
    }
    case LayerKind::kFc:
    case LayerKind::kOutput:
      if (l.fan_out == 0) fail(index, l.kind, "fan_out must be >= 1");
      if (l.fan_in != in.size()) {
        fail(index, l.kind,
             "fan_in " + std::to_string(l.fan_in) + " does not match input " + to_string(in));
      }
      return Shape{1, 1, l.fan_out, 1};
    case LayerKind::kBnSign:
      return in;
    case LayerKind::kMaxPool: {
      if (l.pool == 0) fail(index, l.kind, "pool must be >= 1");
      Shape out = in;
      out.h1 = in.h1 / l.pool;
      if (in.dim == 2) out.h2 = in.h2 / l.pool;
      if (out.size() == 0) fail(index, l.kind, "pool window larger than input " + to_string(in));
      return out;
    }
  }
  throw ValidationError(layer_tag(index, l.kind) + ": unknown layer kind");
}

std::size_t weight_units(const Layer& l) {
  return l.kind == LayerKind::kFc || l.kind == LayerKind::kOutput ? l.fan_out : l.filters;
}

// Little-endian byte IO.
class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { raw(v, 2); }
  void u32(std::uint32_t v) { raw(v, 4); }
  void i32(std::int32_t v) { raw(static_cast<std::uint32_t>(v), 4); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void raw(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(raw(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(raw(4))); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw ParseError("truncated model file at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t raw(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= std::uint64_t{in_[pos_ + k]} << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Bits read_plane(Reader& r, std::size_t count, std::size_t index, const char* what) {
  const auto bytes = r.bytes((count + 7) / 8);
  if (count % 8 != 0 && (bytes.back() >> (count % 8)) != 0) {
    throw ParseError("layer " + std::to_string(index) + ": nonzero padding bits in " + what +
                     " plane");
  }
  return unpack_bits(bytes, count);
}

}  // namespace

Shape output_shape(const Shape& in, const Layer& layer, std::size_t index) {
  return next_shape_impl(in, layer, index);
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "CONV1D";
    case LayerKind::kConv2d: return "CONV2D";
    case LayerKind::kFc: return "FC";
    case LayerKind::kBnSign: return "BN_SIGN";
    case LayerKind::kMaxPool: return "MAXPOOL";
    case LayerKind::kOutput: return "OUTPUT";
  }
  return "?";
}

std::string to_string(const Shape& s) {
  std::string r = std::to_string(s.h1) + "x" + std::to_string(s.h2);
  if (s.dim == 2) r += "x" + std::to_string(s.h3);
  return r;
}

std::size_t TernaryWeights::row_nonzero(std::size_t unit) const {
  const auto row = mask.begin() + static_cast<std::ptrdiff_t>(unit * fan_in);
  return static_cast<std::size_t>(std::count(row, row + static_cast<std::ptrdiff_t>(fan_in), 1));
}

std::size_t Model::class_count() const {
  return layers.empty() || layers.back().kind != LayerKind::kOutput ? 0 : layers.back().fan_out;
}

bool Model::link_reduced() const {
  return std::any_of(layers.begin(), layers.end(), [](const Layer& l) {
    return l.weighted() && std::find(l.weights.mask.begin(), l.weights.mask.end(), 0) !=
                               l.weights.mask.end();
  });
}

std::uint32_t conv_out_len(std::uint32_t in, std::uint32_t kernel, std::uint32_t stride,
                           Padding padding) {
  if (padding == Padding::kSame) {
    if (in % stride != 0) {
      throw ValidationError("same padding: input " + std::to_string(in) +
                            " not divisible by stride " + std::to_string(stride));
    }
    return in / stride;
  }
  if (kernel > in || (in - kernel) % stride != 0) {
    throw ValidationError("valid padding: kernel " + std::to_string(kernel) + " stride " +
                          std::to_string(stride) + " does not tile input " + std::to_string(in));
  }
  return (in - kernel) / stride + 1;
}

std::uint32_t conv_pad_before(std::uint32_t in, std::uint32_t kernel, std::uint32_t stride,
                              Padding padding) {
  if (padding == Padding::kValid) return 0;
  const std::int64_t out = in / stride;
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + kernel - in, 0);
  return static_cast<std::uint32_t>(total / 2);
}

std::int64_t effective_threshold(std::int64_t t, std::size_t padded, std::size_t lv) {
  const auto full = static_cast<std::int64_t>(lv + padded);
  t = std::clamp<std::int64_t>(t, 0, full + 1);
  t -= static_cast<std::int64_t>(padded / 2);
  return std::clamp<std::int64_t>(t, 0, static_cast<std::int64_t>(lv) + 1);
}

std::int64_t quantize_threshold(double gamma, double beta, std::int64_t lv) {
  if (!(gamma > 0) || !std::isfinite(gamma)) {
    throw ValidationError("quantize_threshold: gamma must be positive");
  }
  if (!std::isfinite(beta) || lv < 0) throw ValidationError("quantize_threshold: bad arguments");
  const auto fires = [&](std::int64_t c1) {
    return gamma * static_cast<double>(2 * c1 - lv) + beta >= 0.0;
  };
  const double tau = (gamma * static_cast<double>(lv) - beta) / (2.0 * gamma);
  std::int64_t t;
  if (tau <= 0) {
    t = 0;
  } else if (tau >= static_cast<double>(lv + 1)) {
    t = lv + 1;
  } else {
    t = static_cast<std::int64_t>(std::ceil(tau));
  }
  // Rounding in tau can land one step off; settle by direct evaluation.
  while (t > 0 && fires(t - 1)) --t;
  while (t <= lv && !fires(t)) ++t;
  return t;
}

std::vector<Shape> validate(const Model& model) {
  const Shape& in = model.input;
  if ((in.dim != 1 && in.dim != 2) || in.h1 == 0 || in.h2 == 0 || (in.dim == 2 && in.h3 == 0)) {
    throw ValidationError("bad input shape");
  }
  if (model.layers.empty()) throw ValidationError("model has no layers");
  std::vector<Shape> shapes{in};
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    const bool last = i + 1 == model.layers.size();
    if (l.kind == LayerKind::kOutput && !last) fail(i, l.kind, "OUTPUT must be the last layer");
    if (last && l.kind != LayerKind::kOutput) fail(i, l.kind, "last layer must be OUTPUT");
    const Shape out = output_shape(shapes.back(), l, i);

    if (l.weighted()) {
      const std::size_t units = weight_units(l);
      const std::size_t fan_in = l.kind == LayerKind::kConv1d || l.kind == LayerKind::kConv2d
                                     ? conv_fan_in(l, shapes.back())
                                     : l.fan_in;
      const TernaryWeights& w = l.weights;
      if (w.units != units || w.fan_in != fan_in || w.sign.size() != units * fan_in ||
          w.mask.size() != units * fan_in) {
        fail(i, l.kind, "weight planes do not match " + std::to_string(units) + "x" +
                            std::to_string(fan_in));
      }
      for (std::size_t k = 0; k < w.sign.size(); ++k) {
        if (w.sign[k] > 1 || w.mask[k] > 1) fail(i, l.kind, "weight plane entries must be bits");
      }
      for (std::size_t u = 0; u < units; ++u) {
        if (w.row_nonzero(u) == 0) fail(i, l.kind, "unit " + std::to_string(u) + " has no nonzero weights");
      }
      if (l.kind != LayerKind::kOutput &&
          (last || model.layers[i + 1].kind != LayerKind::kBnSign)) {
        fail(i, l.kind, "must be followed by BN_SIGN");
      }
    }
    if (l.kind == LayerKind::kBnSign) {
      if (i == 0 || !model.layers[i - 1].weighted() ||
          model.layers[i - 1].kind == LayerKind::kOutput) {
        fail(i, l.kind, "must follow CONV1D, CONV2D or FC");
      }
      const std::size_t units = weight_units(model.layers[i - 1]);
      if (l.thresholds.size() != units) {
        fail(i, l.kind, "expected " + std::to_string(units) + " thresholds, got " +
                            std::to_string(l.thresholds.size()));
      }
    }
    shapes.push_back(out);
  }
  return shapes;
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] != 0) out[k / 8] |= static_cast<std::uint8_t>(1U << (k % 8));
  }
  return out;
}

Bits unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() * 8 < count) throw ParseError("bit buffer too short");
  Bits out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = (bytes[k / 8] >> (k % 8)) & 1U;
  return out;
}

std::vector<std::uint8_t> serialize_model(const Model& model) {
  validate(model);
  Writer w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("FBNN"), 4));
  w.u16(kVersion);
  w.u8(static_cast<std::uint8_t>(model.input.dim));
  w.u32(model.input.h1);
  w.u32(model.input.h2);
  if (model.input.dim == 2) w.u32(model.input.h3);
  w.u16(static_cast<std::uint16_t>(model.layers.size()));
  for (const Layer& l : model.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    switch (l.kind) {
      case LayerKind::kConv1d:
        w.u32(l.filters);
        w.u32(l.kernel_h);
        w.u32(l.stride);
        w.u32(static_cast<std::uint32_t>(l.padding));
        break;
      case LayerKind::kConv2d:
        w.u32(l.filters);
        w.u32(l.kernel_h);
        w.u32(l.kernel_w);
        w.u32(l.stride);
        w.u32(static_cast<std::uint32_t>(l.padding));
        break;
      case LayerKind::kFc:
      case LayerKind::kOutput:
        w.u32(l.fan_in);
        w.u32(l.fan_out);
        break;
      case LayerKind::kBnSign:
        w.u32(static_cast<std::uint32_t>(l.thresholds.size()));
        for (std::int32_t t : l.thresholds) w.i32(t);
        break;
      case LayerKind::kMaxPool:
        w.u32(l.pool);
        break;
    }
    if (l.weighted()) {
      w.bytes(pack_bits(l.weights.sign));
      w.bytes(pack_bits(l.weights.mask));
    }
  }
  return w.take();
}

Model parse_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), "FBNN")) throw ParseError("bad magic");
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw ParseError("unsupported FBNN version " + std::to_string(version));
  Model m;
  m.input.dim = r.u8();
  if (m.input.dim != 1 && m.input.dim != 2) throw ParseError("bad input dimensionality");
  m.input.h1 = r.u32();
  m.input.h2 = r.u32();
  m.input.h3 = m.input.dim == 2 ? r.u32() : 1;
  const std::uint16_t count = r.u16();

  Shape shape = m.input;
  for (std::size_t i = 0; i < count; ++i) {
    Layer l;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 6) {
      throw ParseError("layer " + std::to_string(i) + ": unknown kind " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    switch (l.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kConv2d:
        l.filters = r.u32();
        l.kernel_h = r.u32();
        if (l.kind == LayerKind::kConv2d) l.kernel_w = r.u32();
        l.stride = r.u32();
        {
          const std::uint32_t pad = r.u32();
          if (pad > 1) throw ParseError("layer " + std::to_string(i) + ": bad padding mode");
          l.padding = static_cast<Padding>(pad);
        }
        break;
      case LayerKind::kFc:
      case LayerKind::kOutput:
        l.fan_in = r.u32();
        l.fan_out = r.u32();
        break;
      case LayerKind::kBnSign: {
        const std::uint32_t units = r.u32();
        if (units > bytes.size()) throw ParseError("layer " + std::to_string(i) + ": bad unit count");
        l.thresholds.resize(units);
        for (auto& t : l.thresholds) t = r.i32();
        break;
      }
      case LayerKind::kMaxPool:
        l.pool = r.u32();
        break;
    }
    Shape out;
    try {
      out = output_shape(shape, l, i);
    } catch (const ValidationError& e) {
      throw ParseError(e.what());
    }
    if (l.weighted()) {
      l.weights.units = weight_units(l);
      l.weights.fan_in = l.kind == LayerKind::kConv1d || l.kind == LayerKind::kConv2d
                             ? conv_fan_in(l, shape)
                             : l.fan_in;
      const std::size_t n = l.weights.units * l.weights.fan_in;
      if (n / 8 > bytes.size()) throw ParseError("layer " + std::to_string(i) + ": planes exceed file");
      l.weights.sign = read_plane(r, n, i, "sign");
      l.weights.mask = read_plane(r, n, i, "mask");
    }
    shape = out;
    m.layers.push_back(std::move(l));
  }
  if (!r.done()) throw ParseError("trailing bytes after last layer at byte " + std::to_string(r.pos()));
  validate(m);
  return m;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace

Model read_model_file(const std::filesystem::path& path) { return parse_model(read_file(path)); }

void write_model_file(const std::filesystem::path& path, const Model& model) {
  write_file(path, serialize_model(model));
}

Bits encode_input(std::span<const int> values) {
  Bits out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] != 1 && values[k] != -1) {
      throw ValidationError("input entry " + std::to_string(k) + " is not +1 or -1");
    }
    out[k] = values[k] == 1 ? 1 : 0;
  }
  return out;
}

Bits read_input_file(const std::filesystem::path& path, std::size_t count) {
  const auto bytes = read_file(path);
  if (bytes.size() != (count + 7) / 8) {
    throw ParseError("input file " + path.string() + " has " + std::to_string(bytes.size()) +
                     " bytes, expected " + std::to_string((count + 7) / 8));
  }
  return unpack_bits(bytes, count);
}

void write_input_file(const std::filesystem::path& path, std::span<const std::uint8_t> bits) {
  write_file(path, pack_bits(bits));
}

namespace {

struct UnitCount {
  std::int64_t c1 = 0;
  std::size_t lv = 0;
  std::size_t padded = 0;
};

// Dot products of a weighted layer over input bits, one entry per output
// activation in the output layout.
std::vector<UnitCount> weighted_counts(const Layer& l, const Shape& in, const Shape& out,
                                       const Bits& x) {
  const TernaryWeights& w = l.weights;
  std::vector<UnitCount> res;
  res.reserve(out.size());
  if (l.kind == LayerKind::kFc || l.kind == LayerKind::kOutput) {
    for (std::size_t u = 0; u < w.units; ++u) {
      UnitCount uc;
      for (std::size_t i = 0; i < w.fan_in; ++i) {
        if (!w.nonzero(u, i)) continue;
        ++uc.lv;
        uc.c1 += (x[i] != 0) == w.positive(u, i);
      }
      res.push_back(uc);
    }
    return res;
  }
  const std::int64_t ch = in.channels();
  if (l.kind == LayerKind::kConv1d) {
    const std::int64_t pad = conv_pad_before(in.h1, l.kernel_h, l.stride, l.padding);
    for (std::int64_t o = 0; o < out.h1; ++o) {
      for (std::size_t f = 0; f < l.filters; ++f) {
        UnitCount uc;
        for (std::int64_t k = 0; k < l.kernel_h; ++k) {
          const std::int64_t p = o * l.stride - pad + k;
          for (std::int64_t c = 0; c < ch; ++c) {
            const auto idx = static_cast<std::size_t>(k * ch + c);
            if (!w.nonzero(f, idx)) continue;
            if (p < 0 || p >= in.h1) {
              ++uc.padded;
              continue;
            }
            ++uc.lv;
            uc.c1 += (x[static_cast<std::size_t>(p * ch + c)] != 0) == w.positive(f, idx);
          }
        }
        res.push_back(uc);
      }
    }
    return res;
  }
  const std::int64_t pad_i = conv_pad_before(in.h1, l.kernel_h, l.stride, l.padding);
  const std::int64_t pad_j = conv_pad_before(in.h2, l.kernel_w, l.stride, l.padding);
  for (std::int64_t oi = 0; oi < out.h1; ++oi) {
    for (std::int64_t oj = 0; oj < out.h2; ++oj) {
      for (std::size_t f = 0; f < l.filters; ++f) {
        UnitCount uc;
        for (std::int64_t a = 0; a < l.kernel_h; ++a) {
          for (std::int64_t b = 0; b < l.kernel_w; ++b) {
            const std::int64_t pi = oi * l.stride - pad_i + a;
            const std::int64_t pj = oj * l.stride - pad_j + b;
            const bool outside = pi < 0 || pi >= in.h1 || pj < 0 || pj >= in.h2;
            for (std::int64_t c = 0; c < ch; ++c) {
              const auto idx = static_cast<std::size_t>((a * l.kernel_w + b) * ch + c);
              if (!w.nonzero(f, idx)) continue;
              if (outside) {
                ++uc.padded;
                continue;
              }
              ++uc.lv;
              const auto xi = static_cast<std::size_t>((pi * in.h2 + pj) * ch + c);
              uc.c1 += (x[xi] != 0) == w.positive(f, idx);
            }
          }
        }
        res.push_back(uc);
      }
    }
  }
  return res;
}

Bits max_pool(const Shape& in, const Shape& out, std::uint32_t pool, const Bits& x) {
  Bits y(out.size(), 0);
  const std::size_t ch = in.channels();
  if (in.dim == 1) {
    for (std::size_t q = 0; q < out.h1; ++q) {
      for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t k = 0; k < pool; ++k) y[q * ch + c] |= x[(q * pool + k) * ch + c];
      }
    }
    return y;
  }
  for (std::size_t i = 0; i < out.h1; ++i) {
    for (std::size_t j = 0; j < out.h2; ++j) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::uint8_t v = 0;
        for (std::size_t a = 0; a < pool; ++a) {
          for (std::size_t b = 0; b < pool; ++b) {
            v |= x[((i * pool + a) * in.h2 + (j * pool + b)) * ch + c];
          }
        }
        y[(i * out.h2 + j) * ch + c] = v;
      }
    }
  }
  return y;
}

}  // namespace

PlainTrace plain_trace(const Model& model, std::span<const std::uint8_t> input_bits) {
  const std::vector<Shape> shapes = validate(model);
  if (input_bits.size() != model.input.size()) {
    throw ValidationError("input has " + std::to_string(input_bits.size()) + " bits, model expects " +
                          std::to_string(model.input.size()));
  }
  PlainTrace trace;
  trace.activations.resize(model.layers.size());
  trace.counts.resize(model.layers.size());
  Bits x(input_bits.begin(), input_bits.end());
  std::vector<UnitCount> pending;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    switch (l.kind) {
      case LayerKind::kConv1d:
      case LayerKind::kConv2d:
      case LayerKind::kFc:
      case LayerKind::kOutput:
        pending = weighted_counts(l, shapes[i], shapes[i + 1], x);
        for (const UnitCount& uc : pending) trace.counts[i].push_back(uc.c1);
        break;
      case LayerKind::kBnSign: {
        const std::size_t units = l.thresholds.size();
        x.assign(pending.size(), 0);
        for (std::size_t k = 0; k < pending.size(); ++k) {
          const UnitCount& uc = pending[k];
          const std::int64_t t = effective_threshold(l.thresholds[k % units], uc.padded, uc.lv);
          x[k] = uc.c1 >= t ? 1 : 0;
        }
        trace.activations[i] = x;
        break;
      }
      case LayerKind::kMaxPool:
        x = max_pool(shapes[i], shapes[i + 1], l.pool, x);
        trace.activations[i] = x;
        break;
    }
  }
  trace.scores = trace.counts.back();
  return trace;
}

std::vector<std::int64_t> plain_infer(const Model& model, std::span<const int> input_pm1) {
  const Bits bits = encode_input(input_pm1);
  return plain_trace(model, bits).scores;
}

std::size_t argmax(std::span<const std::int64_t> scores) {
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace obnn
