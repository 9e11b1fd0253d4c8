#pragma once

#include <array>
#include <cstdint>

#include "npb/special.hpp"

namespace npb {

// Threefry2x64, 20 rounds (Salmon et al., SC'11). Counter-based, so streams
// are pure functions of (key, counter) with no hidden state; any language
// can reproduce them bit-exactly.
inline std::array<std::uint64_t, 2> threefry2x64(
    std::array<std::uint64_t, 2> ctr, std::array<std::uint64_t, 2> key) {
  constexpr std::uint64_t parity = 0x1BD11BDAA9FC1A22ull;
  constexpr int rot[8] = {16, 42, 12, 31, 16, 32, 24, 21};
  auto rotl = [](std::uint64_t x, int r) {
    return (x << r) | (x >> (64 - r));
  };

  const std::uint64_t ks[3] = {key[0], key[1], parity ^ key[0] ^ key[1]};
  std::uint64_t x0 = ctr[0] + ks[0];
  std::uint64_t x1 = ctr[1] + ks[1];
  for (int r = 0; r < 20; ++r) {
    x0 += x1;
    x1 = rotl(x1, rot[r % 8]);
    x1 ^= x0;
    if (r % 4 == 3) {
      const std::uint64_t j = std::uint64_t(r / 4) + 1;  // injection count
      x0 += ks[j % 3];
      x1 += ks[(j + 1) % 3] + j;
    }
  }
  return {x0, x1};
}

// Maps the top 53 bits to (0,1); never returns an endpoint, so inverse-CDF
// transforms stay finite. The one tie that would round up to 1.0 in binary64
// (all 53 bits set) is pinned to the largest double below 1.
inline double u64_to_unit(std::uint64_t x) {
  const double u = (double(x >> 11) + 0.5) * 0x1p-53;
  return u < 1.0 ? u : 1.0 - 0x1p-53;
}

// One stream = one (seed, stream) key; draws advance a 64-bit counter. Each
// counter tick yields a block of two 64-bit words.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_{seed, stream} {}

  std::uint64_t next_u64() {
    if (have_ == 0) {
      block_ = threefry2x64({counter_++, 0}, key_);
      have_ = 2;
    }
    return block_[2 - have_--];
  }

  double uniform() { return u64_to_unit(next_u64()); }

  double normal() { return norm_ppf(uniform()); }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 2> block_{};
  std::uint64_t counter_ = 0;
  int have_ = 0;
};

}  // namespace npb
