#include "obnn/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <vector>

#include "obnn/error.hpp"

namespace obnn {
namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

CipherCtx make_ctx(const EVP_CIPHER* cipher, const std::uint8_t* key, const std::uint8_t* iv) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), cipher, nullptr, key, iv) != 1) {
    throw Error("openssl: cipher init failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  return ctx;
}

void encrypt_blocks(EVP_CIPHER_CTX* ctx, const std::uint8_t* in, std::uint8_t* out,
                    std::size_t bytes) {
  int produced = 0;
  if (EVP_EncryptUpdate(ctx, out, &produced, in, static_cast<int>(bytes)) != 1 ||
      static_cast<std::size_t>(produced) != bytes) {
    throw Error("openssl: encrypt failed");
  }
}

// Public, arbitrary fixed key for the garbling permutation.
constexpr std::array<std::uint8_t, 16> kFixedKey = {0x6f, 0x62, 0x6e, 0x6e, 0x2d, 0x67, 0x63, 0x2d,
                                                    0x66, 0x69, 0x78, 0x65, 0x64, 0x6b, 0x65, 0x79};

}  // namespace

Block Block::doubled() const {
  Block r;
  const std::uint64_t carry = hi >> 63;
  r.hi = (hi << 1) | (lo >> 63);
  r.lo = (lo << 1) ^ (carry * 0x87U);
  return r;
}

void Block::store(std::span<std::uint8_t, kBytes> out) const {
  for (int k = 0; k < 8; ++k) {
    out[k] = static_cast<std::uint8_t>(lo >> (8 * k));
    out[8 + k] = static_cast<std::uint8_t>(hi >> (8 * k));
  }
}

Block Block::load(std::span<const std::uint8_t, kBytes> in) {
  Block b;
  for (int k = 0; k < 8; ++k) {
    b.lo |= static_cast<std::uint64_t>(in[k]) << (8 * k);
    b.hi |= static_cast<std::uint64_t>(in[8 + k]) << (8 * k);
  }
  return b;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

Seed random_seed() {
  Seed s{};
  if (RAND_bytes(s.data(), static_cast<int>(s.size())) != 1) {
    throw Error("openssl: RAND_bytes failed");
  }
  return s;
}

struct Prg::Impl {
  CipherCtx ctx;
  std::vector<std::uint8_t> zeros;
};

Prg::Prg(const Seed& seed) : impl_(std::make_unique<Impl>()) {
  std::array<std::uint8_t, 16> iv{};
  impl_->ctx = make_ctx(EVP_aes_256_ctr(), seed.data(), iv.data());
}
Prg::~Prg() = default;
Prg::Prg(Prg&&) noexcept = default;
Prg& Prg::operator=(Prg&&) noexcept = default;

Block Prg::next() {
  Block b;
  fill(std::span<Block>(&b, 1));
  return b;
}

void Prg::fill(std::span<Block> out) {
  const std::size_t bytes = out.size() * Block::kBytes;
  if (impl_->zeros.size() < bytes) impl_->zeros.resize(bytes, 0);
  std::vector<std::uint8_t> buf(bytes);
  encrypt_blocks(impl_->ctx.get(), impl_->zeros.data(), buf.data(), bytes);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = Block::load(std::span<const std::uint8_t, 16>(buf.data() + 16 * k, 16));
  }
}

struct FixedKeyHash::Impl {
  CipherCtx ctx;
};

FixedKeyHash::FixedKeyHash() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = make_ctx(EVP_aes_128_ecb(), kFixedKey.data(), nullptr);
}
FixedKeyHash::~FixedKeyHash() = default;
FixedKeyHash::FixedKeyHash(FixedKeyHash&&) noexcept = default;
FixedKeyHash& FixedKeyHash::operator=(FixedKeyHash&&) noexcept = default;

Block FixedKeyHash::operator()(const Block& x, std::uint64_t tweak) const {
  Block out;
  batch(std::span<const Block>(&x, 1), std::span<const std::uint64_t>(&tweak, 1),
        std::span<Block>(&out, 1));
  return out;
}

void FixedKeyHash::batch(std::span<const Block> xs, std::span<const std::uint64_t> tweaks,
                         std::span<Block> out) const {
  constexpr std::size_t kMax = 8;
  std::array<Block, kMax> doubled{};
  std::array<std::uint8_t, kMax * 16> in{};
  std::array<std::uint8_t, kMax * 16> enc{};
  for (std::size_t base = 0; base < xs.size(); base += kMax) {
    const std::size_t n = std::min(kMax, xs.size() - base);
    for (std::size_t k = 0; k < n; ++k) {
      doubled[k] = xs[base + k].doubled();
      Block masked = doubled[k];
      masked.lo ^= tweaks[base + k];
      masked.store(std::span<std::uint8_t, 16>(in.data() + 16 * k, 16));
    }
    encrypt_blocks(impl_->ctx.get(), in.data(), enc.data(), n * 16);
    for (std::size_t k = 0; k < n; ++k) {
      out[base + k] =
          Block::load(std::span<const std::uint8_t, 16>(enc.data() + 16 * k, 16)) ^ doubled[k];
    }
  }
}

}  // namespace obnn
