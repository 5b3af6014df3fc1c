#pragma once

#include <cstdint>
#include <random>

namespace fatou {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Reproducible random stream identified by (master seed, stream index).
/// Distinct indices give distinct engine seeds, so a batch of trajectories
/// can be split across workers without changing any draw.
class RngStream {
 public:
  RngStream(std::uint64_t master, std::uint64_t stream)
      : master_(master), stream_(stream), engine_(splitmix64(splitmix64(master) ^ stream)) {}

  std::uint64_t master() const { return master_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next() { return engine_(); }
  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// A fresh stream derived from this one's identity, for a nested batch.
  RngStream child(std::uint64_t index) const {
    return RngStream(splitmix64(master_ ^ splitmix64(stream_ + 0x5851f42d4c957f2dull)), index);
  }

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace fatou
