#include "obnn/ot.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include <cstring>

#include "obnn/error.hpp"

namespace obnn {

std::string_view to_string(OtKind kind) {
  return kind == OtKind::kSimplest ? "simplest" : "insecure-stub";
}

namespace {

constexpr std::size_t kPointBytes = 33;  // compressed P-256 point

struct GroupDeleter {
  void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct CtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
using GroupPtr = std::unique_ptr<EC_GROUP, GroupDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using CtxPtr = std::unique_ptr<BN_CTX, CtxDeleter>;

void check(int ok, const char* what) {
  if (ok != 1) throw Error(std::string("openssl: ") + what);
}

class Curve {
 public:
  Curve() : group_(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1)), ctx_(BN_CTX_new()) {
    if (!group_ || !ctx_) throw Error("openssl: P-256 unavailable");
  }

  PointPtr point() const {
    PointPtr p(EC_POINT_new(group_.get()));
    if (!p) throw Error("openssl: EC_POINT_new");
    return p;
  }

  BnPtr random_scalar() const {
    BnPtr k(BN_new());
    const BIGNUM* order = EC_GROUP_get0_order(group_.get());
    do {
      check(BN_rand_range(k.get(), order), "BN_rand_range");
    } while (BN_is_zero(k.get()));
    return k;
  }

  /// k*G when base is null, else k*base.
  PointPtr mul(const BIGNUM* k, const EC_POINT* base = nullptr) const {
    PointPtr r = point();
    if (base == nullptr) {
      check(EC_POINT_mul(group_.get(), r.get(), k, nullptr, nullptr, ctx_.get()), "EC_POINT_mul");
    } else {
      check(EC_POINT_mul(group_.get(), r.get(), nullptr, base, k, ctx_.get()), "EC_POINT_mul");
    }
    return r;
  }

  PointPtr add(const EC_POINT* a, const EC_POINT* b) const {
    PointPtr r = point();
    check(EC_POINT_add(group_.get(), r.get(), a, b, ctx_.get()), "EC_POINT_add");
    return r;
  }

  PointPtr neg(const EC_POINT* a) const {
    PointPtr r(EC_POINT_dup(a, group_.get()));
    check(EC_POINT_invert(group_.get(), r.get(), ctx_.get()), "EC_POINT_invert");
    return r;
  }

  bool infinite(const EC_POINT* p) const { return EC_POINT_is_at_infinity(group_.get(), p) == 1; }

  void encode(const EC_POINT* p, std::uint8_t* out) const {
    const std::size_t n = EC_POINT_point2oct(group_.get(), p, POINT_CONVERSION_COMPRESSED, out,
                                             kPointBytes, ctx_.get());
    if (n != kPointBytes) throw Error("openssl: point encoding");
  }

  PointPtr decode(const std::uint8_t* in) const {
    PointPtr p = point();
    if (EC_POINT_oct2point(group_.get(), p.get(), in, kPointBytes, ctx_.get()) != 1 ||
        EC_POINT_is_at_infinity(group_.get(), p.get()) == 1 ||
        EC_POINT_is_on_curve(group_.get(), p.get(), ctx_.get()) != 1) {
      throw ProtocolError("OT: invalid group element");
    }
    return p;
  }

 private:
  GroupPtr group_;
  CtxPtr ctx_;
};

/// Key derivation: SHA-256(A || B || index || shared point), truncated.
Block derive_key(const std::uint8_t* a, const std::uint8_t* b, std::uint64_t index,
                 const std::uint8_t* shared) {
  std::uint8_t buf[3 * kPointBytes + 8];
  std::memcpy(buf, a, kPointBytes);
  std::memcpy(buf + kPointBytes, b, kPointBytes);
  for (int k = 0; k < 8; ++k) buf[2 * kPointBytes + k] = static_cast<std::uint8_t>(index >> (8 * k));
  std::memcpy(buf + 2 * kPointBytes + 8, shared, kPointBytes);
  const Digest d = sha256(buf);
  return Block::load(std::span<const std::uint8_t, 16>(d.data(), 16));
}

void put_block(std::vector<std::uint8_t>& out, const Block& b) {
  std::uint8_t tmp[16];
  b.store(tmp);
  out.insert(out.end(), tmp, tmp + 16);
}

Block get_block(std::span<const std::uint8_t> in, std::size_t offset) {
  return Block::load(std::span<const std::uint8_t, 16>(in.data() + offset, 16));
}

class SimplestSender : public OtSender {
 public:
  std::vector<std::uint8_t> setup() override {
    a_ = curve_.random_scalar();
    big_a_ = curve_.mul(a_.get());
    std::vector<std::uint8_t> msg(kPointBytes);
    curve_.encode(big_a_.get(), msg.data());
    a_bytes_ = msg;
    return msg;
  }

  std::vector<std::uint8_t> transfer(std::span<const std::uint8_t> choose_msg,
                                     std::span<const std::pair<Block, Block>> messages) override {
    if (!a_) throw ProtocolError("OT: transfer before setup");
    if (choose_msg.size() != messages.size() * kPointBytes) {
      throw ProtocolError("OT: choose message has " + std::to_string(choose_msg.size()) +
                          " bytes, expected " + std::to_string(messages.size() * kPointBytes));
    }
    // k0 = H(aB), k1 = H(aB - aA)
    const PointPtr neg_aa = curve_.neg(curve_.mul(a_.get(), big_a_.get()).get());
    std::vector<std::uint8_t> out;
    out.reserve(messages.size() * 32);
    std::uint8_t s0[kPointBytes];
    std::uint8_t s1[kPointBytes];
    for (std::size_t i = 0; i < messages.size(); ++i) {
      const std::uint8_t* b_bytes = choose_msg.data() + i * kPointBytes;
      const PointPtr b = curve_.decode(b_bytes);
      const PointPtr ab = curve_.mul(a_.get(), b.get());
      curve_.encode(ab.get(), s0);
      const PointPtr ab_minus = curve_.add(ab.get(), neg_aa.get());
      if (curve_.infinite(ab_minus.get())) {
        throw ProtocolError("OT: degenerate receiver element");
      }
      curve_.encode(ab_minus.get(), s1);
      put_block(out, messages[i].first ^ derive_key(a_bytes_.data(), b_bytes, i, s0));
      put_block(out, messages[i].second ^ derive_key(a_bytes_.data(), b_bytes, i, s1));
    }
    return out;
  }

 private:
  Curve curve_;
  BnPtr a_;
  PointPtr big_a_;
  std::vector<std::uint8_t> a_bytes_;
};

class SimplestReceiver : public OtReceiver {
 public:
  std::vector<std::uint8_t> choose(std::span<const std::uint8_t> setup_msg,
                                   std::span<const std::uint8_t> choices) override {
    if (setup_msg.size() != kPointBytes) throw ProtocolError("OT: malformed setup message");
    a_bytes_.assign(setup_msg.begin(), setup_msg.end());
    const PointPtr big_a = curve_.decode(setup_msg.data());
    choices_.assign(choices.begin(), choices.end());
    keys_.clear();
    std::vector<std::uint8_t> out(choices.size() * kPointBytes);
    std::uint8_t shared[kPointBytes];
    for (std::size_t i = 0; i < choices.size(); ++i) {
      const BnPtr b = curve_.random_scalar();
      PointPtr big_b = curve_.mul(b.get());
      if (choices[i] != 0) big_b = curve_.add(big_b.get(), big_a.get());
      std::uint8_t* b_bytes = out.data() + i * kPointBytes;
      curve_.encode(big_b.get(), b_bytes);
      curve_.encode(curve_.mul(b.get(), big_a.get()).get(), shared);
      keys_.push_back(derive_key(a_bytes_.data(), b_bytes, i, shared));
    }
    return out;
  }

  std::vector<Block> finish(std::span<const std::uint8_t> transfer_msg) override {
    if (transfer_msg.size() != keys_.size() * 32) {
      throw ProtocolError("OT: transfer message has " + std::to_string(transfer_msg.size()) +
                          " bytes, expected " + std::to_string(keys_.size() * 32));
    }
    std::vector<Block> out;
    out.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      out.push_back(get_block(transfer_msg, 32 * i + (choices_[i] != 0 ? 16 : 0)) ^ keys_[i]);
    }
    return out;
  }

 private:
  Curve curve_;
  std::vector<std::uint8_t> a_bytes_;
  Bits choices_;
  std::vector<Block> keys_;
};

// Sends the chosen messages in the clear. Never use outside tests.
class StubSender : public OtSender {
 public:
  std::vector<std::uint8_t> setup() override { return {}; }
  std::vector<std::uint8_t> transfer(std::span<const std::uint8_t> choose_msg,
                                     std::span<const std::pair<Block, Block>> messages) override {
    if (choose_msg.size() != messages.size()) throw ProtocolError("OT stub: bad choice message");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
      if (choose_msg[i] > 1) throw ProtocolError("OT stub: bad choice byte");
      put_block(out, choose_msg[i] != 0 ? messages[i].second : messages[i].first);
    }
    return out;
  }
};

class StubReceiver : public OtReceiver {
 public:
  std::vector<std::uint8_t> choose(std::span<const std::uint8_t> setup_msg,
                                   std::span<const std::uint8_t> choices) override {
    if (!setup_msg.empty()) throw ProtocolError("OT stub: unexpected setup payload");
    count_ = choices.size();
    std::vector<std::uint8_t> out(choices.begin(), choices.end());
    for (auto& c : out) c = c != 0 ? 1 : 0;
    return out;
  }
  std::vector<Block> finish(std::span<const std::uint8_t> transfer_msg) override {
    if (transfer_msg.size() != count_ * 16) throw ProtocolError("OT stub: bad transfer message");
    std::vector<Block> out;
    for (std::size_t i = 0; i < count_; ++i) out.push_back(get_block(transfer_msg, 16 * i));
    return out;
  }

 private:
  std::size_t count_ = 0;
};

}  // namespace

std::unique_ptr<OtSender> make_ot_sender(OtKind kind) {
  if (kind == OtKind::kSimplest) return std::make_unique<SimplestSender>();
  return std::make_unique<StubSender>();
}

std::unique_ptr<OtReceiver> make_ot_receiver(OtKind kind) {
  if (kind == OtKind::kSimplest) return std::make_unique<SimplestReceiver>();
  return std::make_unique<StubReceiver>();
}

}  // namespace obnn
