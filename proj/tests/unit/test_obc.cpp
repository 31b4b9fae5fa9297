#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "obnn/error.hpp"
#include "obnn/obc.hpp"

using namespace obnn;

namespace {

std::uint64_t outputs_value(const Bits& out) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < out.size(); ++k) v |= std::uint64_t{out[k]} << k;
  return v;
}

NumberBundle input_number(Circuit& c, int width) {
  NumberBundle b;
  for (int k = 0; k < width; ++k) b.bits.push_back(c.add_input(Party::kEvaluator));
  b.max_value = (std::uint64_t{1} << width) - 1;
  return b;
}

std::int64_t nonxor(ObcKind kind, std::size_t n) {
  return count_gates(build_popcount_circuit(kind, n)).nonxor;
}

}  // namespace

TEST(OneBitAdder, TruthTable) {
  Circuit c;
  const WireRef a = c.add_input(Party::kEvaluator);
  const WireRef b = c.add_input(Party::kEvaluator);
  const WireRef ci = c.add_input(Party::kEvaluator);
  const AdderBits r = one_bit_adder(c, a, b, ci);
  c.add_output(r.sum);
  c.add_output(r.carry);
  EXPECT_EQ(count_gates(c).nonxor, 1);
  for (int row = 0; row < 8; ++row) {
    const Bits in{static_cast<std::uint8_t>(row & 1), static_cast<std::uint8_t>((row >> 1) & 1),
                  static_cast<std::uint8_t>((row >> 2) & 1)};
    const Bits out = eval_plain(c, {}, in);
    EXPECT_EQ(2 * out[1] + out[0], in[0] + in[1] + in[2]) << "row " << row;
  }
}

TEST(RippleAdd, GateCountEqualWidths) {
  for (int w = 1; w <= 8; ++w) {
    Circuit c;
    const NumberBundle x = input_number(c, w);
    const NumberBundle y = input_number(c, w);
    const NumberBundle s = ripple_add(c, x, y);
    EXPECT_EQ(s.width(), static_cast<std::size_t>(w + 1));
    EXPECT_EQ(c.and_count(), w);
  }
}

TEST(RippleAdd, RandomSixBit) {
  Circuit c;
  const NumberBundle x = input_number(c, 6);
  const NumberBundle y = input_number(c, 6);
  const NumberBundle s = ripple_add(c, x, y);
  for (const WireRef& b : s.bits) c.add_output(b);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const std::uint64_t a = rng() % 64;
    const std::uint64_t b = rng() % 64;
    Bits in;
    for (int k = 0; k < 6; ++k) in.push_back((a >> k) & 1);
    for (int k = 0; k < 6; ++k) in.push_back((b >> k) & 1);
    EXPECT_EQ(outputs_value(eval_plain(c, {}, in)), a + b);
  }
}

TEST(RippleAdd, MixedWidthsAndZero) {
  Circuit c;
  const NumberBundle x = input_number(c, 5);
  const NumberBundle zero{{c.constant(false)}, 0};
  const NumberBundle y = input_number(c, 2);
  const NumberBundle s0 = ripple_add(c, zero, x);
  const NumberBundle s1 = ripple_add(c, x, y);
  EXPECT_EQ(s1.width(), 6U);
  for (const WireRef& b : s0.bits) c.add_output(b);
  for (const WireRef& b : s1.bits) c.add_output(b);
  for (std::uint64_t a = 0; a < 32; ++a) {
    for (std::uint64_t b = 0; b < 4; ++b) {
      Bits in;
      for (int k = 0; k < 5; ++k) in.push_back((a >> k) & 1);
      for (int k = 0; k < 2; ++k) in.push_back((b >> k) & 1);
      const Bits out = eval_plain(c, {}, in);
      EXPECT_EQ(outputs_value(Bits(out.begin(), out.begin() + 6)), a);
      EXPECT_EQ(outputs_value(Bits(out.begin() + 6, out.end())), a + b);
    }
  }
}

TEST(RippleAdd, BoundedWidthMustHoldSum) {
  Circuit c;
  const NumberBundle x = input_number(c, 2);
  const NumberBundle y = input_number(c, 2);
  EXPECT_THROW(ripple_add(c, x, y, 2), StructuralError);
  EXPECT_THROW(ripple_add(c, x, y, 4), StructuralError);
  NumberBundle small = x;
  small.max_value = 1;
  const std::int64_t before = c.and_count();
  const NumberBundle s = ripple_add(c, small, small, 2);
  EXPECT_EQ(s.width(), 2U);
  EXPECT_EQ(c.and_count() - before, 1);
}

TEST(TreeAdder, SingleAndFigureFour) {
  Circuit c;
  const NumberBundle x = input_number(c, 2);
  const NumberBundle same = tree_adder(c, {x});
  EXPECT_EQ(same.bits, x.bits);
  EXPECT_EQ(c.and_count(), 0);
  EXPECT_THROW(tree_adder(c, {}), StructuralError);

  Circuit d;
  std::vector<NumberBundle> four;
  for (int i = 0; i < 4; ++i) four.push_back(input_number(d, 2));
  const NumberBundle s = tree_adder(d, four, WidthPolicy::kGrow);
  EXPECT_EQ(s.width(), 4U);
  EXPECT_EQ(d.and_count(), 2 * 2 + 3);
}

TEST(TreeAdder, SixteenRandom) {
  Circuit c;
  std::vector<NumberBundle> xs;
  for (int i = 0; i < 16; ++i) xs.push_back(input_number(c, 2));
  const NumberBundle s = tree_adder(c, xs);
  for (const WireRef& b : s.bits) c.add_output(b);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    Bits in(32);
    std::uint64_t want = 0;
    for (int i = 0; i < 16; ++i) {
      const std::uint64_t v = rng() % 4;
      want += v;
      in[2 * i] = v & 1;
      in[2 * i + 1] = (v >> 1) & 1;
    }
    EXPECT_EQ(outputs_value(eval_plain(c, {}, in)), want);
  }
}

TEST(Popcount, ExhaustiveSmall) {
  for (ObcKind kind : kAllObcKinds) {
    for (std::size_t n = 1; n <= 10; ++n) {
      const Circuit c = build_popcount_circuit(kind, n);
      ASSERT_EQ(c.outputs().size(), static_cast<std::size_t>(bit_length(n)));
      for (std::uint32_t x = 0; x < (1U << n); ++x) {
        Bits in(n);
        for (std::size_t k = 0; k < n; ++k) in[k] = (x >> k) & 1;
        ASSERT_EQ(outputs_value(eval_plain(c, {}, in)),
                  static_cast<std::uint64_t>(std::popcount(x)))
            << to_string(kind) << " n=" << n << " x=" << x;
      }
    }
  }
}

TEST(Popcount, WorkedExamples) {
  // Nine bits with six ones resolve to [0,1,1,0].
  const Circuit c = build_popcount_circuit(ObcKind::kLayerwiseAccum, 9);
  EXPECT_EQ(eval_plain(c, {}, Bits{1, 0, 1, 1, 0, 1, 1, 0, 1}), (Bits{0, 1, 1, 0}));
  // Fifteen bits with ten ones resolve to 1010.
  const Circuit b = build_popcount_circuit(ObcKind::kBitLengthBound, 15);
  EXPECT_EQ(eval_plain(b, {}, Bits{1, 1, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0}),
            (Bits{0, 1, 0, 1}));
}

TEST(Popcount, DegenerateAndSmallCounts) {
  for (ObcKind kind : kAllObcKinds) {
    EXPECT_EQ(nonxor(kind, 1), 0);
    EXPECT_EQ(build_popcount_circuit(kind, 3).outputs().size(), 2U);
  }
  EXPECT_EQ(nonxor(ObcKind::kLayerwiseAccum, 3), 1);
  EXPECT_EQ(nonxor(ObcKind::kBitLengthBound, 3), 1);
  EXPECT_EQ(nonxor(ObcKind::kTreeAdder, 3), 3);
  EXPECT_EQ(nonxor(ObcKind::kTreeAdder, 2), 1);

  Circuit c;
  const NumberBundle z = popcount(c, ObcKind::kTreeAdder, {});
  EXPECT_EQ(z.width(), 1U);
  EXPECT_EQ(z.max_value, 0U);
}

TEST(Popcount, ReferenceCounts) {
  const std::int64_t ns[] = {250, 500, 1000, 2000};
  const std::int64_t ta[] = {492, 991, 1990, 3989};
  const std::int64_t blb[] = {328, 664, 1330, 2673};
  const std::int64_t lba[] = {244, 494, 994, 1994};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(nonxor(ObcKind::kTreeAdder, ns[i]), ta[i]);
    EXPECT_EQ(nonxor(ObcKind::kBitLengthBound, ns[i]), blb[i]);
    EXPECT_EQ(nonxor(ObcKind::kLayerwiseAccum, ns[i]), lba[i]);
  }
}

TEST(Popcount, DominanceAndBounds) {
  for (std::int64_t n = 1; n <= 600; ++n) {
    const std::int64_t t = nonxor(ObcKind::kTreeAdder, n);
    const std::int64_t b = nonxor(ObcKind::kBitLengthBound, n);
    const std::int64_t l = nonxor(ObcKind::kLayerwiseAccum, n);
    if (n >= 3) {
      EXPECT_LE(l, b) << n;
      EXPECT_LE(b, t) << n;
    }
    const GateBounds lb = lba_bounds(n);
    EXPECT_GE(l, lb.lower) << n;
    EXPECT_LE(l, lb.upper) << n;
    EXPECT_LT(b, 1.71 * static_cast<double>(n)) << n;
    if (n > 255) EXPECT_GT(b, 1.29 * static_cast<double>(n)) << n;
    if (std::has_single_bit(static_cast<std::uint64_t>(n))) {
      EXPECT_EQ(t, ta_count_formula(n).value) << n;
    }
  }
}

TEST(Formulas, TreeAdder) {
  EXPECT_EQ(ta_count_formula(256).value, 502);
  EXPECT_TRUE(ta_count_formula(256).exact);
  EXPECT_EQ(ta_count_formula(2).value, 1);
  EXPECT_EQ(ta_count_formula(1024).value, 2036);
  EXPECT_FALSE(ta_count_formula(250).exact);
  EXPECT_THROW(ta_count_formula(0), ValidationError);
}

TEST(Formulas, BoundsExamples) {
  const GateBounds b500 = blb_bounds(500);
  EXPECT_EQ(b500.lower, 645);
  EXPECT_EQ(b500.upper, 855);
  EXPECT_EQ(blb_bounds(100).lower, 0);
  const GateBounds b2000 = blb_bounds(2000);
  EXPECT_EQ(b2000.lower, 2580);
  EXPECT_EQ(b2000.upper, 3420);
  EXPECT_EQ(b2000.l_bits, 11);
  EXPECT_EQ(b2000.k_levels, 4);

  const GateBounds l250 = lba_bounds(250);
  EXPECT_EQ(l250.lower, 242);
  EXPECT_EQ(l250.upper, 250);
  EXPECT_EQ(lba_bounds(1).lower, 0);
  EXPECT_EQ(lba_bounds(1).upper, 1);
  EXPECT_EQ(lba_bounds(1000).lower, 990);
}

TEST(Formulas, GroupCost) {
  EXPECT_EQ(blb_group_cost(1), 10);
  EXPECT_EQ(blb_group_cost(2), 78);
  EXPECT_THROW(blb_group_cost(0), ValidationError);
  for (int kappa = 1; kappa <= 2; ++kappa) {
    const int width = 1 << kappa;
    const int members = (1 << width) + 1;
    Circuit c;
    std::vector<NumberBundle> group;
    for (int i = 0; i < members; ++i) group.push_back(input_number(c, width));
    const NumberBundle last = group.back();
    group.pop_back();
    const NumberBundle s = tree_adder(c, group);
    ripple_add(c, s, last, static_cast<std::size_t>(bit_length(s.max_value + last.max_value)));
    EXPECT_EQ(c.and_count(), blb_group_cost(kappa)) << kappa;
  }
}

TEST(ObcKind, Parse) {
  EXPECT_EQ(parse_obc_kind("LBA"), ObcKind::kLayerwiseAccum);
  EXPECT_EQ(parse_obc_kind("ta"), ObcKind::kTreeAdder);
  EXPECT_FALSE(parse_obc_kind("wallace").has_value());
  EXPECT_EQ(to_string(ObcKind::kBitLengthBound), "blb");
}
