#pragma once
// Counter-based RNG: Philox4x32-10 with hand-rolled Box-Muller normals.
// Streams are keyed by (seed, stream); draws depend only on (key, counter),
// so results are reproducible byte-for-byte across runs and platforms and
// independent streams can be handed to parallel workers safely.

#include <cmath>
#include <cstdint>

namespace agmrf {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97f4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t k = detail::splitmix64(seed) ^ detail::splitmix64(detail::splitmix64(stream) + 0x632BE59BD9B4E019ull);
    key0_ = static_cast<std::uint32_t>(k);
    key1_ = static_cast<std::uint32_t>(k >> 32);
  }

  std::uint32_t next_u32() {
    if (have_ == 0) {
      gen_block();
      have_ = 4;
    }
    return buf_[4 - have_--];
  }

  // Uniform in (0,1]: 53-bit mantissa, never exactly 0 (safe under log()).
  double next_unit() {
    std::uint64_t hi = next_u32(), lo = next_u32();
    std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  double next_normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_;
    }
    double u1 = next_unit(), u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_normal_ = true;
    return r * std::cos(a);
  }

 private:
  void gen_block() {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ull * c0;
      std::uint64_t p1 = 0xCD9E8D57ull * c2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = c0; buf_[1] = c1; buf_[2] = c2; buf_[3] = c3;
    if (++ctr_ == 0) ++ctr_hi_;
  }

  std::uint32_t key0_, key1_;
  std::uint64_t ctr_ = 0, ctr_hi_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int have_ = 0;
  bool have_normal_ = false;
  double cached_ = 0.0;
};

}  // namespace agmrf
