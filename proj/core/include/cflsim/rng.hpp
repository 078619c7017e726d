// Deterministic seeded random streams. Every stochastic quantity in the
// simulator is drawn from a stream derived from (master seed, tag, a, b),
// so results never depend on evaluation order or thread scheduling.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace cflsim {

// splitmix64 finalizer.
std::uint64_t hash_mix(std::uint64_t x);

// Derives an independent stream seed from the master seed, a module tag and
// up to two indices (typically client id and round).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 engine with hand-rolled variate transforms. The engine itself is
// fully specified by the standard, so streams are reproducible across
// platforms and standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();

  // Exponential with unit rate.
  double exponential();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Draws k distinct values from [0, n) (partial Fisher-Yates), ascending.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cflsim
