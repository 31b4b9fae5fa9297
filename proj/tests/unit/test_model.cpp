#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "obnn/error.hpp"
#include "obnn/model.hpp"
#include "obnn/synth.hpp"

using namespace obnn;

namespace {

Model single_neuron(const Bits& signs, std::int32_t t) {
  Model m;
  m.input = Shape{1, 1, static_cast<std::uint32_t>(signs.size()), 1};
  Layer fc;
  fc.kind = LayerKind::kFc;
  fc.fan_in = static_cast<std::uint32_t>(signs.size());
  fc.fan_out = 1;
  fc.weights = {1, signs.size(), signs, Bits(signs.size(), 1)};
  Layer bn;
  bn.kind = LayerKind::kBnSign;
  bn.thresholds = {t};
  Layer out;
  out.kind = LayerKind::kOutput;
  out.fan_in = 1;
  out.fan_out = 1;
  out.weights = {1, 1, Bits{1}, Bits{1}};
  m.layers = {fc, bn, out};
  return m;
}

}  // namespace

TEST(Model, HandComputedNeuron) {
  const Model m = single_neuron(Bits{1, 1, 1}, 2);
  EXPECT_EQ(plain_infer(m, std::vector<int>{1, 1, -1}), (std::vector<std::int64_t>{1}));
  EXPECT_EQ(plain_infer(m, std::vector<int>{1, -1, -1}), (std::vector<std::int64_t>{0}));
  EXPECT_THROW(plain_infer(m, std::vector<int>{1, 0, 1}), ValidationError);
  EXPECT_THROW(plain_infer(m, std::vector<int>{1, 1}), ValidationError);
}

TEST(Model, MaskedPositionContributesNothing) {
  Model m = single_neuron(Bits{1, 0, 1, 1}, 2);
  const PlainTrace dense = plain_trace(m, Bits{1, 1, 0, 1});
  m.layers[0].weights.mask[1] = 0;
  for (std::uint8_t v : {0, 1}) {
    const PlainTrace sparse = plain_trace(m, Bits{1, v, 0, 1});
    EXPECT_EQ(sparse.counts[0][0], 2);
  }
  EXPECT_EQ(dense.counts[0][0], 2);
  EXPECT_TRUE(m.link_reduced());
}

TEST(Model, QuantizeThresholdExamples) {
  EXPECT_EQ(quantize_threshold(1, 0, 10), 5);
  EXPECT_EQ(quantize_threshold(2, 3, 9), 4);
  EXPECT_EQ(quantize_threshold(1, 100, 10), 0);
  EXPECT_EQ(quantize_threshold(1, -100, 10), 11);
  EXPECT_THROW(quantize_threshold(0, 1, 3), ValidationError);
  EXPECT_THROW(quantize_threshold(-1, 1, 3), ValidationError);
}

TEST(Model, QuantizeThresholdMatchesSign) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> g(0.01, 4.0);
  std::uniform_real_distribution<double> b(-40.0, 40.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double gamma = g(rng);
    const double beta = trial % 5 == 0 ? std::round(b(rng)) : b(rng);
    const std::int64_t lv = static_cast<std::int64_t>(rng() % 65);
    const std::int64_t t = quantize_threshold(gamma, beta, lv);
    for (std::int64_t c1 = 0; c1 <= lv; ++c1) {
      const bool fires = gamma * static_cast<double>(2 * c1 - lv) + beta >= 0;
      ASSERT_EQ(c1 >= t, fires) << gamma << " " << beta << " " << lv << " " << c1;
    }
  }
}

TEST(Model, EffectiveThresholdKeepsXDomainDecision) {
  for (std::size_t full = 1; full <= 20; ++full) {
    for (std::int64_t t = 0; t <= static_cast<std::int64_t>(full) + 1; ++t) {
      for (std::size_t p = 0; p <= full; ++p) {
        const std::size_t lv = full - p;
        const std::int64_t te = effective_threshold(t, p, lv);
        for (std::int64_t c = 0; c <= static_cast<std::int64_t>(lv); ++c) {
          const std::int64_t theta = 2 * t - static_cast<std::int64_t>(full);
          ASSERT_EQ(c >= te, 2 * c - static_cast<std::int64_t>(lv) >= theta)
              << full << " " << t << " " << p << " " << c;
        }
      }
    }
  }
}

TEST(Model, ConvShapes) {
  EXPECT_EQ(conv_out_len(8, 3, 1, Padding::kSame), 8U);
  EXPECT_EQ(conv_out_len(8, 3, 1, Padding::kValid), 6U);
  EXPECT_EQ(conv_out_len(8, 2, 2, Padding::kValid), 4U);
  EXPECT_THROW(conv_out_len(8, 3, 2, Padding::kValid), ValidationError);
  EXPECT_THROW(conv_out_len(9, 3, 2, Padding::kSame), ValidationError);
  EXPECT_EQ(conv_pad_before(8, 3, 1, Padding::kSame), 1U);
  EXPECT_EQ(conv_pad_before(8, 4, 1, Padding::kSame), 1U);
}

TEST(Model, SlidingMajority) {
  Model m;
  m.input = Shape{1, 8, 1, 1};
  Layer conv;
  conv.kind = LayerKind::kConv1d;
  conv.filters = 1;
  conv.kernel_h = 3;
  conv.padding = Padding::kSame;
  conv.weights = {1, 3, Bits{1, 1, 1}, Bits{1, 1, 1}};
  Layer bn;
  bn.kind = LayerKind::kBnSign;
  bn.thresholds = {2};
  Layer out;
  out.kind = LayerKind::kOutput;
  out.fan_in = 8;
  out.fan_out = 1;
  out.weights = {1, 8, Bits(8, 1), Bits(8, 1)};
  m.layers = {conv, bn, out};
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 256; ++trial) {
    Bits x(8);
    for (int k = 0; k < 8; ++k) x[k] = (trial >> k) & 1;
    const PlainTrace tr = plain_trace(m, x);
    for (int p = 0; p < 8; ++p) {
      int c = 0;
      int lv = 0;
      for (int k = -1; k <= 1; ++k) {
        if (p + k < 0 || p + k >= 8) continue;
        ++lv;
        c += x[p + k];
      }
      // Border windows drop one tap; floor(1/2) = 0 keeps the threshold at 2.
      EXPECT_EQ(tr.activations[1][p], c >= 2) << trial << " " << p << " lv=" << lv;
    }
  }
}

TEST(Model, Conv2dBorderLv) {
  const Model m = random_model(Shape{2, 4, 4, 1}, parse_plan("conv2d:2:3:3,out:2"), 0.0, 5);
  const auto shapes = validate(m);
  EXPECT_EQ(shapes[1], (Shape{2, 4, 4, 2}));
  const PlainTrace tr = plain_trace(m, Bits(16, 1));
  ASSERT_EQ(tr.counts[0].size(), 32U);
  // All-ones input: count equals the number of in-bounds +1 weights.
  const TernaryWeights& w = m.layers[0].weights;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int f = 0; f < 2; ++f) {
        int want = 0;
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            const int pi = i - 1 + a;
            const int pj = j - 1 + b;
            if (pi < 0 || pi >= 4 || pj < 0 || pj >= 4) continue;
            want += w.positive(f, a * 3 + b);
          }
        }
        EXPECT_EQ(tr.counts[0][(i * 4 + j) * 2 + f], want);
      }
    }
  }
}

TEST(Model, MaxPool) {
  const Model m = random_model(Shape{2, 4, 4, 1}, parse_plan("pool:2,out:1"), 0.0, 9);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Bits x(16);
    for (auto& v : x) v = rng() & 1;
    const PlainTrace tr = plain_trace(m, x);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const int want = x[(2 * i) * 4 + 2 * j] | x[(2 * i) * 4 + 2 * j + 1] |
                         x[(2 * i + 1) * 4 + 2 * j] | x[(2 * i + 1) * 4 + 2 * j + 1];
        EXPECT_EQ(tr.activations[0][i * 2 + j], want);
      }
    }
  }
}

TEST(Model, Validation) {
  Model m = single_neuron(Bits{1, 1}, 1);
  m.layers[0].weights.mask = {0, 0};
  EXPECT_THROW(validate(m), ValidationError);
  Model empty;
  empty.input = Shape{1, 1, 4, 1};
  EXPECT_THROW(validate(empty), ValidationError);
  Model no_bn = single_neuron(Bits{1, 1}, 1);
  no_bn.layers.erase(no_bn.layers.begin() + 1);
  EXPECT_THROW(validate(no_bn), ValidationError);
  Model bad_t = single_neuron(Bits{1, 1}, 1);
  bad_t.layers[1].thresholds = {1, 2};
  try {
    validate(bad_t);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
}

TEST(Fbnn, GoldenBytes) {
  const Model m = single_neuron(Bits{1, 0, 1}, 2);
  const std::vector<std::uint8_t> want = {
      'F', 'B', 'N', 'N', 1, 0, 1, 1, 0, 0, 0, 3, 0, 0, 0, 3, 0,  // header
      3, 3, 0, 0, 0, 1, 0, 0, 0, 0x05, 0x07,                       // FC 3->1
      4, 1, 0, 0, 0, 2, 0, 0, 0,                                   // BN_SIGN t=2
      6, 1, 0, 0, 0, 1, 0, 0, 0, 0x01, 0x01,                       // OUTPUT 1->1
  };
  EXPECT_EQ(serialize_model(m), want);
  const Model back = parse_model(want);
  EXPECT_EQ(serialize_model(back), want);
}

TEST(Fbnn, RoundTripRandom) {
  const char* plans[] = {"conv1d:4:3,pool:2,fc:8,out:3", "conv1d:3:2:2:valid,out:2",
                         "conv2d:2:3:3,pool:2,out:4", "fc:16,fc:8,out:2"};
  const Shape shapes[] = {Shape{1, 16, 2, 1}, Shape{1, 8, 3, 1}, Shape{2, 6, 6, 2},
                          Shape{1, 1, 20, 1}};
  for (int i = 0; i < 4; ++i) {
    const Model m = random_model(shapes[i], parse_plan(plans[i]), 0.3, 100 + i);
    const auto bytes = serialize_model(m);
    EXPECT_EQ(serialize_model(parse_model(bytes)), bytes) << plans[i];
    EXPECT_EQ(bytes, serialize_model(random_model(shapes[i], parse_plan(plans[i]), 0.3, 100 + i)));
  }
}

TEST(Fbnn, ParseErrors) {
  const Model m = single_neuron(Bits{1, 0, 1}, 2);
  auto bytes = serialize_model(m);
  auto bad = bytes;
  bad[0] = 'X';
  try {
    parse_model(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
  EXPECT_THROW(parse_model(std::span(bytes).first(bytes.size() - 1)), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(parse_model(trailing), ParseError);
  auto padbits = bytes;
  padbits[26] = 0x0F;  // mask plane of the FC layer has 3 valid bits
  EXPECT_THROW(parse_model(padbits), ParseError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(parse_model(version), ParseError);
}

TEST(Bits, PackUnpack) {
  const Bits b{1, 0, 1, 1, 0, 0, 0, 0, 1, 1};
  const auto packed = pack_bits(b);
  EXPECT_EQ(packed, (std::vector<std::uint8_t>{0x0D, 0x03}));
  EXPECT_EQ(unpack_bits(packed, b.size()), b);
  EXPECT_EQ(encode_input(std::vector<int>{-1, 1, 1}), (Bits{0, 1, 1}));
}

TEST(Synth, SparsityAndPlan) {
  const Model dense = random_model(Shape{1, 1, 2000, 1}, parse_plan("fc:4,out:2"), 0.0, 1);
  for (auto v : dense.layers[0].weights.mask) ASSERT_EQ(v, 1);
  const Model sparse = random_model(Shape{1, 1, 2000, 1}, parse_plan("fc:4,out:2"), 0.3, 1);
  for (std::size_t u = 0; u < 4; ++u) {
    const double zero = 1.0 - static_cast<double>(sparse.layers[0].weights.row_nonzero(u)) / 2000.0;
    EXPECT_NEAR(zero, 0.3, 0.02);
  }
  EXPECT_THROW(parse_plan("conv1d:4"), ParseError);
  EXPECT_THROW(parse_plan("lstm:3"), ParseError);
  EXPECT_THROW(parse_shape("4"), ParseError);
  EXPECT_EQ(parse_shape("8x8x1"), (Shape{2, 8, 8, 1}));
}
