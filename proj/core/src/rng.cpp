#include "cflsim/rng.hpp"

#include <algorithm>
#include <cmath>

namespace cflsim {

std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = hash_mix(master);
  for (unsigned char c : tag) {
    h = hash_mix(h ^ c);
  }
  h = hash_mix(h ^ a);
  h = hash_mix(h ^ b);
  return h;
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t threshold = (-n) % n;
  for (;;) {
    std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u clamped away from 0 so log stays finite.
  double u = uniform01();
  if (u <= 0.0) u = 0x1.0p-53;
  double v = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u));
  const double angle = 2.0 * M_PI * v;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::exponential() {
  double u = uniform01();
  if (u >= 1.0) u = 1.0 - 0x1.0p-53;
  return -std::log1p(-u);
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  k = std::min(k, n);
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j =
        i + static_cast<int>(uniform_int(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace cflsim
