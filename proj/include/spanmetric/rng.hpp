#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace spanmetric {

// splitmix64 finaliser; used to derive independent substreams.
std::uint64_t mix64(std::uint64_t x);

// Stable 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

// Seed for item `index` of stream `seed`; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

// xoshiro256** generator with platform-independent helpers. The standard
// library distributions are implementation-defined, so everything that
// feeds a deterministic output goes through this class instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  bool coin();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace spanmetric
