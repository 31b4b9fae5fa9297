#include "obnn/obc.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <string>

#include "obnn/error.hpp"

namespace obnn {

std::string_view to_string(ObcKind kind) {
  switch (kind) {
    case ObcKind::kTreeAdder:
      return "ta";
    case ObcKind::kBitLengthBound:
      return "blb";
    case ObcKind::kLayerwiseAccum:
      return "lba";
  }
  return "?";
}

std::optional<ObcKind> parse_obc_kind(std::string_view name) {
  std::string lower(name);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "ta") return ObcKind::kTreeAdder;
  if (lower == "blb") return ObcKind::kBitLengthBound;
  if (lower == "lba") return ObcKind::kLayerwiseAccum;
  return std::nullopt;
}

int bit_length(std::uint64_t n) { return n == 0 ? 1 : static_cast<int>(std::bit_width(n)); }

AdderBits one_bit_adder(Circuit& c, WireRef a, WireRef b, WireRef carry_in) {
  const WireRef ac = c.gate_xor(a, carry_in);
  const WireRef bc = c.gate_xor(b, carry_in);
  const WireRef sum = c.gate_xor(a, bc);
  const WireRef carry = c.gate_xor(carry_in, c.gate_and(ac, bc));
  return {carry, sum};
}

NumberBundle ripple_add(Circuit& c, const NumberBundle& x, const NumberBundle& y,
                        std::optional<std::size_t> out_width) {
  const NumberBundle& wide = x.width() >= y.width() ? x : y;
  const NumberBundle& narrow = x.width() >= y.width() ? y : x;
  const std::size_t m = wide.width();
  const std::size_t n = narrow.width();
  if (n == 0) throw StructuralError("ripple_add: empty operand");
  const std::size_t w = out_width.value_or(m + 1);
  const std::uint64_t max_sum = x.max_value + y.max_value;
  if (w == 0 || w > m + 1 || (w < 64 && max_sum >> w != 0)) {
    throw StructuralError("ripple_add: result width " + std::to_string(w) +
                          " cannot hold the sum");
  }

  NumberBundle out;
  out.max_value = max_sum;
  out.bits.reserve(w);
  std::optional<WireRef> carry;
  for (std::size_t i = 0; i < std::min(m, w); ++i) {
    const WireRef a = wide.bits[i];
    const bool need_carry = i + 1 < w;
    if (i < n && carry) {
      const WireRef b = narrow.bits[i];
      if (need_carry) {
        const AdderBits r = one_bit_adder(c, a, b, *carry);
        out.bits.push_back(r.sum);
        carry = r.carry;
      } else {
        out.bits.push_back(c.gate_xor(c.gate_xor(a, b), *carry));
      }
    } else if (i < n) {
      const WireRef b = narrow.bits[i];
      out.bits.push_back(c.gate_xor(a, b));
      if (need_carry) carry = c.gate_and(a, b);
    } else if (carry) {
      out.bits.push_back(c.gate_xor(a, *carry));
      if (need_carry) carry = c.gate_and(a, *carry);
    } else {
      out.bits.push_back(a);
    }
  }
  if (w == m + 1) out.bits.push_back(carry ? *carry : c.constant(false));
  return out;
}

NumberBundle tree_adder(Circuit& c, std::vector<NumberBundle> xs, WidthPolicy policy) {
  if (xs.empty()) throw StructuralError("tree_adder: empty input list");
  while (xs.size() > 1) {
    std::vector<NumberBundle> next;
    next.reserve(xs.size() / 2 + 1);
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      std::optional<std::size_t> width;
      if (policy == WidthPolicy::kBounded) {
        width = static_cast<std::size_t>(bit_length(xs[i].max_value + xs[i + 1].max_value));
      }
      next.push_back(ripple_add(c, xs[i], xs[i + 1], width));
    }
    if (xs.size() % 2 == 1) next.push_back(std::move(xs.back()));
    xs = std::move(next);
  }
  return std::move(xs.front());
}

NumberBundle ta_popcount(Circuit& c, std::span<const WireRef> bits) {
  if (bits.empty()) throw StructuralError("ta_popcount: empty input");
  std::vector<NumberBundle> leaves;
  leaves.reserve(bits.size());
  for (const WireRef& b : bits) leaves.push_back(NumberBundle{{b}, 1});
  NumberBundle sum = tree_adder(c, std::move(leaves), WidthPolicy::kGrow);
  // Grown high bits above ceil(log2(N+1)) are provably zero.
  sum.bits.resize(std::min(sum.bits.size(), static_cast<std::size_t>(bit_length(bits.size()))));
  return sum;
}

NumberBundle blb_popcount(Circuit& c, std::span<const WireRef> bits) {
  const std::size_t n = bits.size();
  if (n == 0) throw StructuralError("blb_popcount: empty input");
  if (n == 1) return NumberBundle{{bits[0]}, 1};

  // Bit computation: each triple becomes one 2-bit number; leftovers are
  // zero-extended.
  std::vector<NumberBundle> pool;
  pool.reserve(n / 3 + 2);
  std::size_t i = 0;
  for (; i + 3 <= n; i += 3) {
    const AdderBits r = one_bit_adder(c, bits[i], bits[i + 1], bits[i + 2]);
    pool.push_back(NumberBundle{{r.sum, r.carry}, 3});
  }
  for (; i < n; ++i) pool.push_back(NumberBundle{{bits[i], c.constant(false)}, 1});

  // Cross-layer rounds over 2^p-bit numbers in groups of 2^(2^p) + 1.
  for (int p = 1; pool.size() > 1; ++p) {
    const int member_bits = 1 << p;
    const std::size_t group =
        member_bits >= 63 ? SIZE_MAX : (std::size_t{1} << member_bits) + 1;
    if (pool.size() < group) {
      std::stable_sort(pool.begin(), pool.end(), [](const NumberBundle& a, const NumberBundle& b) {
        return a.max_value > b.max_value;
      });
      pool = {tree_adder(c, std::move(pool), WidthPolicy::kBounded)};
      break;
    }
    std::vector<NumberBundle> next;
    next.reserve(pool.size() / group + 1);
    std::size_t t = 0;
    for (; t + group <= pool.size(); t += group) {
      std::vector<NumberBundle> head(std::make_move_iterator(pool.begin() + t),
                                     std::make_move_iterator(pool.begin() + t + group - 1));
      NumberBundle s = tree_adder(c, std::move(head), WidthPolicy::kBounded);
      const NumberBundle& rest = pool[t + group - 1];
      const auto width = static_cast<std::size_t>(bit_length(s.max_value + rest.max_value));
      next.push_back(ripple_add(c, s, rest, width));
    }
    if (t < pool.size()) {
      std::vector<NumberBundle> tail(std::make_move_iterator(pool.begin() + t),
                                     std::make_move_iterator(pool.end()));
      next.push_back(tree_adder(c, std::move(tail), WidthPolicy::kBounded));
    }
    pool = std::move(next);
  }
  return std::move(pool.front());
}

NumberBundle lba_popcount(Circuit& c, std::span<const WireRef> bits) {
  const std::size_t n = bits.size();
  if (n == 0) throw StructuralError("lba_popcount: empty input");
  const int q = bit_length(n);

  NumberBundle out;
  out.max_value = n;
  out.bits.reserve(q);
  std::vector<WireRef> layer(bits.begin(), bits.end());
  for (int k = 0; k < q; ++k) {
    std::vector<WireRef> carries;
    while (layer.size() >= 3) {
      const std::size_t groups = layer.size() / 3;
      std::vector<WireRef> sums;
      sums.reserve(groups + 2);
      for (std::size_t j = 0; j < groups; ++j) {
        const AdderBits r = one_bit_adder(c, layer[3 * j], layer[3 * j + 1], layer[3 * j + 2]);
        carries.push_back(r.carry);
        sums.push_back(r.sum);
      }
      for (std::size_t j = 3 * groups; j < layer.size(); ++j) sums.push_back(layer[j]);
      layer = std::move(sums);
    }
    if (layer.size() == 2) {
      const AdderBits r = one_bit_adder(c, layer[0], layer[1], c.constant(false));
      carries.push_back(r.carry);
      out.bits.push_back(r.sum);
    } else if (layer.size() == 1) {
      out.bits.push_back(layer[0]);
    } else {
      out.bits.push_back(c.constant(false));
    }
    layer = std::move(carries);
  }
  return out;
}

NumberBundle popcount(Circuit& c, ObcKind kind, std::span<const WireRef> bits) {
  if (bits.empty()) return NumberBundle{{c.constant(false)}, 0};
  switch (kind) {
    case ObcKind::kTreeAdder:
      return ta_popcount(c, bits);
    case ObcKind::kBitLengthBound:
      return blb_popcount(c, bits);
    case ObcKind::kLayerwiseAccum:
      return lba_popcount(c, bits);
  }
  throw StructuralError("unknown ObcKind");
}

Circuit build_popcount_circuit(ObcKind kind, std::size_t n) {
  Circuit c;
  c.reserve(12 * n + 16);
  std::vector<WireRef> in;
  in.reserve(n);
  for (std::size_t k = 0; k < n; ++k) in.push_back(c.add_input(Party::kEvaluator));
  const NumberBundle sum = popcount(c, kind, in);
  for (const WireRef& b : sum.bits) c.add_output(b);
  return c;
}

FormulaValue ta_count_formula(std::int64_t n) {
  if (n < 1) throw ValidationError("ta_count_formula: n must be >= 1");
  const auto un = static_cast<std::uint64_t>(n);
  if (std::has_single_bit(un)) {
    const auto log2n = static_cast<std::int64_t>(std::countr_zero(un));
    return {2 * (n - 1) - log2n, true};
  }
  const double v = 2.0 * static_cast<double>(n - 1) - std::log2(static_cast<double>(n));
  return {std::llround(v), false};
}

std::int64_t blb_group_cost(int kappa) {
  if (kappa < 1 || kappa > 5) throw ValidationError("blb_group_cost: kappa must be in [1, 5]");
  const std::int64_t members = std::int64_t{1} << (1 << kappa);  // 2^(2^kappa)
  return members * (std::int64_t{1} << kappa) + members - 2;
}

namespace {

int ceil_log2(std::uint64_t v) {
  return v <= 1 ? 0 : static_cast<int>(std::bit_width(v - 1));
}

GateBounds base_bounds(std::int64_t n) {
  if (n < 1) throw ValidationError("bounds: n must be >= 1");
  GateBounds b;
  b.n = n;
  b.l_bits = bit_length(static_cast<std::uint64_t>(n));
  b.k_levels = ceil_log2(static_cast<std::uint64_t>(b.l_bits));
  const double dn = static_cast<double>(n);
  b.ts_formula = 2.0 * (dn - 1.0) - std::log2(dn);
  double series = dn / 3.0;
  double denom = 3.0;  // prod_{l=0}^{kappa} (2^(2^l) + 1)
  for (int kappa = 1; kappa <= b.k_levels - 1 && kappa <= 5; ++kappa) {
    denom *= std::ldexp(1.0, 1 << kappa) + 1.0;
    series += dn / denom * static_cast<double>(blb_group_cost(kappa));
  }
  b.blb_series = series;
  return b;
}

}  // namespace

GateBounds blb_bounds(std::int64_t n) {
  GateBounds b = base_bounds(n);
  b.upper = 171 * n / 100;
  b.lower = n > 255 ? (129 * n + 99) / 100 : 0;
  return b;
}

GateBounds lba_bounds(std::int64_t n) {
  GateBounds b = base_bounds(n);
  b.lower = n - b.l_bits;
  b.upper = n;
  return b;
}

}  // namespace obnn
