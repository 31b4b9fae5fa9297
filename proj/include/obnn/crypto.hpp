#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>

namespace obnn {

/// 128-bit block: wire labels, OT pads, cipher blocks.
struct Block {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool lsb() const { return (lo & 1U) != 0; }

  Block& operator^=(const Block& o) {
    lo ^= o.lo;
    hi ^= o.hi;
    return *this;
  }
  friend Block operator^(Block a, const Block& b) { return a ^= b; }
  friend bool operator==(const Block&, const Block&) = default;

  /// Doubling in GF(2^128) with the x^128 + x^7 + x^2 + x + 1 modulus.
  Block doubled() const;

  static constexpr std::size_t kBytes = 16;
  void store(std::span<std::uint8_t, kBytes> out) const;
  static Block load(std::span<const std::uint8_t, kBytes> in);
};

/// Returns b if bit is set, zero otherwise.
inline Block select(bool bit, const Block& b) { return bit ? b : Block{}; }

using Seed = std::array<std::uint8_t, 32>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);

/// Seed from the operating system CSPRNG.
Seed random_seed();

/// Deterministic generator: AES-256 in counter mode keyed by the seed.
class Prg {
 public:
  explicit Prg(const Seed& seed);
  ~Prg();
  Prg(Prg&&) noexcept;
  Prg& operator=(Prg&&) noexcept;

  Block next();
  void fill(std::span<Block> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Correlation-robust hash H(x, i) = pi(2x ^ i) ^ 2x with pi a fixed-key
/// AES-128 permutation. The key is a public constant.
class FixedKeyHash {
 public:
  FixedKeyHash();
  ~FixedKeyHash();
  FixedKeyHash(FixedKeyHash&&) noexcept;
  FixedKeyHash& operator=(FixedKeyHash&&) noexcept;

  Block operator()(const Block& x, std::uint64_t tweak) const;
  /// Hashes xs[k] with tweaks[k] in one cipher call.
  void batch(std::span<const Block> xs, std::span<const std::uint64_t> tweaks,
             std::span<Block> out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace obnn
