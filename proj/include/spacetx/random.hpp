#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spacetx {

using Rng = std::mt19937_64;

// FNV-1a over the fed bytes with a splitmix64 finalizer. Output is stable
// across runs and platforms; used to derive per-cell seeds.
class StableHasher {
 public:
  StableHasher& add(std::string_view bytes);
  StableHasher& add(std::uint64_t value);
  std::uint64_t digest() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

template <class... Parts>
std::uint64_t stable_hash(const Parts&... parts) {
  StableHasher hasher;
  (hasher.add(parts), ...);
  return hasher.digest();
}

std::uint64_t splitmix64(std::uint64_t x);

// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform01(Rng& rng);

// Uniform index in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

double standard_normal(Rng& rng);

}  // namespace spacetx
