#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "obnn/circuit.hpp"

namespace obnn {

enum class LayerKind : std::uint8_t {
  kConv1d = 1,
  kConv2d = 2,
  kFc = 3,
  kBnSign = 4,
  kMaxPool = 5,
  kOutput = 6,
};

std::string_view to_string(LayerKind kind);

enum class Padding : std::uint8_t { kValid = 0, kSame = 1 };

/// Activation tensor shape. 1D: h1 positions x h2 channels, flat index
/// pos*h2 + c. 2D: h1 x h2 positions x h3 channels, flat index
/// (i*h2 + j)*h3 + c. Fully connected layers produce a 1D shape 1 x fan_out.
struct Shape {
  int dim = 1;
  std::uint32_t h1 = 0;
  std::uint32_t h2 = 0;
  std::uint32_t h3 = 1;

  std::size_t size() const {
    return dim == 1 ? std::size_t{h1} * h2 : std::size_t{h1} * h2 * h3;
  }
  std::uint32_t channels() const { return dim == 1 ? h2 : h3; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Ternary weight matrix: units rows of fan_in entries, row-major, one byte
/// per entry. sign 1 means +1, 0 means -1; mask 0 means the weight is zero.
struct TernaryWeights {
  std::size_t units = 0;
  std::size_t fan_in = 0;
  Bits sign;
  Bits mask;

  bool nonzero(std::size_t unit, std::size_t i) const { return mask[unit * fan_in + i] != 0; }
  bool positive(std::size_t unit, std::size_t i) const { return sign[unit * fan_in + i] != 0; }
  /// Number of nonzero weights in a row.
  std::size_t row_nonzero(std::size_t unit) const;
};

struct Layer {
  LayerKind kind = LayerKind::kFc;
  // CONV1D / CONV2D. For CONV1D only kernel_h is used.
  std::uint32_t filters = 0;
  std::uint32_t kernel_h = 0;
  std::uint32_t kernel_w = 0;
  std::uint32_t stride = 1;
  Padding padding = Padding::kValid;
  // FC / OUTPUT
  std::uint32_t fan_in = 0;
  std::uint32_t fan_out = 0;
  // BN_SIGN: output is 1 iff popcount >= threshold
  std::vector<std::int32_t> thresholds;
  // MAXPOOL (stride equals the window)
  std::uint32_t pool = 0;

  TernaryWeights weights;  // CONV*, FC, OUTPUT

  bool weighted() const {
    return kind == LayerKind::kConv1d || kind == LayerKind::kConv2d || kind == LayerKind::kFc ||
           kind == LayerKind::kOutput;
  }
};

struct Model {
  Shape input;
  std::vector<Layer> layers;

  std::size_t class_count() const;
  /// True when some weight is zero (a link-reduced model).
  bool link_reduced() const;
};

/// Output shape of each layer given the model input; shapes[i] is the input
/// of layer i and shapes.back() the output of the last layer. Throws
/// ValidationError with the offending layer index.
std::vector<Shape> validate(const Model& model);

/// Shape produced by one layer; checks hyperparameters but not weights.
Shape output_shape(const Shape& in, const Layer& layer, std::size_t index = 0);

/// Convolution output length along one axis; throws ValidationError when
/// the configuration does not tile the input exactly.
std::uint32_t conv_out_len(std::uint32_t in, std::uint32_t kernel, std::uint32_t stride,
                           Padding padding);
/// Leading padding along one axis for 'same' convolutions.
std::uint32_t conv_pad_before(std::uint32_t in, std::uint32_t kernel, std::uint32_t stride,
                              Padding padding);

/// Threshold for a window whose padded taps removed `padded` nonzero weights.
/// Keeps the decision 2*c1 - Lv >= 2t - Lv of the full window, clamped to
/// [0, lv + 1].
std::int64_t effective_threshold(std::int64_t t, std::size_t padded, std::size_t lv);

/// Fused batch norm + sign threshold: the smallest t with
/// sign(gamma*(2*c1 - lv) + beta) = +1 for all c1 >= t, Sign(0) = +1,
/// clamped to [0, lv + 1]. Throws ValidationError for gamma <= 0.
std::int64_t quantize_threshold(double gamma, double beta, std::int64_t lv);

// FBNN v1 binary format, little-endian.
std::vector<std::uint8_t> serialize_model(const Model& model);
Model parse_model(std::span<const std::uint8_t> bytes);
Model read_model_file(const std::filesystem::path& path);
void write_model_file(const std::filesystem::path& path, const Model& model);

/// Bit packing, LSB-first within each byte.
std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits);
Bits unpack_bits(std::span<const std::uint8_t> bytes, std::size_t count);

/// Maps -1 to 0 and +1 to 1. Throws ValidationError on other values.
Bits encode_input(std::span<const int> values);
/// Raw bit-packed activation file of exactly ceil(count/8) bytes.
Bits read_input_file(const std::filesystem::path& path, std::size_t count);
void write_input_file(const std::filesystem::path& path, std::span<const std::uint8_t> bits);

/// Per-layer results of the integer reference inference.
struct PlainTrace {
  std::vector<Bits> activations;                  // BN_SIGN / MAXPOOL outputs, by layer index
  std::vector<std::vector<std::int64_t>> counts;  // CONV / FC / OUTPUT popcounts, by layer index
  std::vector<std::int64_t> scores;
};

/// Reference inference on encoded input bits.
PlainTrace plain_trace(const Model& model, std::span<const std::uint8_t> input_bits);
/// Class scores (popcount of each OUTPUT row).
std::vector<std::int64_t> plain_infer(const Model& model, std::span<const int> input_pm1);

std::size_t argmax(std::span<const std::int64_t> scores);

}  // namespace obnn
