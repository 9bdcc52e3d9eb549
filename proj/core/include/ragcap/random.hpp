#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ragcap {

// Seeded randomness with a fully specified algorithm so results are
// reproducible across platforms and standard libraries:
//   stream seed  = splitmix64(seed XOR fnv1a64(key))
//   engine       = std::mt19937_64 seeded with the stream seed
//   bounded(n)   = rejection sampling: draw r until r >= (2^64 - n) mod n, return r mod n
//   uniform01()  = (r >> 11) * 2^-53
//   normal()     = Box-Muller on two uniform01() draws, cosine branch only

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept;

class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed) : engine_(seed) {}
  SeededGenerator(std::uint64_t seed, std::string_view key) : engine_(derive_seed(seed, key)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t bounded(std::uint64_t n);
  /// Uniform real in [0, 1).
  double uniform01();
  /// Standard normal variate.
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace ragcap
