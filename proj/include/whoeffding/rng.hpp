#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace whoeffding {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed for replica `replica` of a run seeded with `seed`.
/// Replica streams depend only on (seed, replica), never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
  return splitmix64(seed ^ splitmix64(replica ^ 0x5851f42d4c957f2dULL));
}

/// Thin wrapper over mt19937_64. The engine's output sequence is fixed by the
/// standard; conversions to doubles are done here so results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() >> 63) != 0; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace whoeffding
