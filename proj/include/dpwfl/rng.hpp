#pragma once

#include <cstdint>
#include <random>

namespace dpwfl {

// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class StreamPurpose : std::uint64_t {
  DeviceSelection = 1,
  BatchSampling = 2,
  FadingGains = 3,
  ChannelNoise = 4,
  DataGeneration = 5,
  SeedSweep = 6,
};

// One master seed, independent sub-streams per (round, purpose, key).
// Each consumer gets its own engine, so e.g. changing the fading spec never
// perturbs the device-sampling randomness of the same run.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::mt19937_64 substream(std::uint64_t round, StreamPurpose purpose,
                            std::uint64_t key = 0) const {
    std::uint64_t h = seed_;
    h = mix64(h ^ (0x9e3779b97f4a7c15ull + round));
    h = mix64(h ^ (0xc2b2ae3d27d4eb4full + static_cast<std::uint64_t>(purpose)));
    h = mix64(h ^ (0x165667b19e3779f9ull + key));
    return std::mt19937_64(h);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace dpwfl
