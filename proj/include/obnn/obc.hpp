#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "obnn/circuit.hpp"

namespace obnn {

/// Oblivious bit count strategy.
enum class ObcKind : std::uint8_t {
  kTreeAdder,        // TA: pairwise tree with naturally growing widths
  kBitLengthBound,   // BLB: 3->2 bit step, then cross-layer groups of 2^(2^p)+1
  kLayerwiseAccum,   // LBA: per-significance layers of 1-bit adders
};

std::string_view to_string(ObcKind kind);
/// Accepts "ta", "blb", "lba" (case-insensitive).
std::optional<ObcKind> parse_obc_kind(std::string_view name);
inline constexpr ObcKind kAllObcKinds[] = {ObcKind::kTreeAdder, ObcKind::kBitLengthBound,
                                          ObcKind::kLayerwiseAccum};

/// How tree additions size their results.
enum class WidthPolicy : std::uint8_t {
  kGrow,     // result width = max(input widths) + 1
  kBounded,  // result width = bit length of the sum of the operands' max_value
};

/// Ceil(log2(n + 1)): bits needed to hold any value in [0, n].
int bit_length(std::uint64_t n);

/// Full adder with a single AND: d0 = a^b^c, d1 = c ^ ((a^c) & (b^c)).
struct AdderBits {
  WireRef carry;  // d1
  WireRef sum;    // d0
};
AdderBits one_bit_adder(Circuit& c, WireRef a, WireRef b, WireRef carry_in);

/// Ripple-carry addition. The wider operand has width m; the result width is
/// out_width when given (it must hold the sum, at most m + 1), else m + 1.
/// Costs min(m, width - 1) AND gates.
NumberBundle ripple_add(Circuit& c, const NumberBundle& x, const NumberBundle& y,
                        std::optional<std::size_t> out_width = std::nullopt);

/// Level-by-level pairwise summation; an odd element at a level moves up
/// unchanged. Throws StructuralError on an empty list.
NumberBundle tree_adder(Circuit& c, std::vector<NumberBundle> xs,
                        WidthPolicy policy = WidthPolicy::kBounded);

NumberBundle ta_popcount(Circuit& c, std::span<const WireRef> bits);
NumberBundle blb_popcount(Circuit& c, std::span<const WireRef> bits);
NumberBundle lba_popcount(Circuit& c, std::span<const WireRef> bits);

/// Dispatches on kind. An empty input yields the constant 0 as a width-1 bundle.
NumberBundle popcount(Circuit& c, ObcKind kind, std::span<const WireRef> bits);

/// Builds a standalone popcount circuit over n evaluator inputs whose outputs
/// are the result bits.
Circuit build_popcount_circuit(ObcKind kind, std::size_t n);

// ---------------------------------------------------------------------------
// Analytic gate counts.

struct FormulaValue {
  std::int64_t value = 0;
  bool exact = false;  // false outside the power-of-two regime
};

/// Tree-adder count 2(n-1) - log2(n); exact for powers of two, rounded otherwise.
FormulaValue ta_count_formula(std::int64_t n);

/// Per-group cost of the kappa-th cross-layer round: 2^(2^k) * 2^k + 2^(2^k) - 2.
/// Valid for 1 <= kappa <= 5.
std::int64_t blb_group_cost(int kappa);

struct GateBounds {
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  std::int64_t n = 0;
  int l_bits = 0;     // L = ceil(log2(N+1))
  int k_levels = 0;   // K = ceil(log2 log2(N+1))
  double ts_formula = 0;   // 2(N-1) - log2 N
  double blb_series = 0;   // N/3 + sum_{k=1}^{K-1} A_k G_k
};

/// upper = floor(1.71 n); lower = ceil(1.29 n) when n > 255, else 0.
GateBounds blb_bounds(std::int64_t n);
/// [n - ceil(log2(n+1)), n].
GateBounds lba_bounds(std::int64_t n);

}  // namespace obnn
