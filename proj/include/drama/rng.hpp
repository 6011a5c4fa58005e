#pragma once

#include <cstdint>
#include <random>

namespace drama {

using Rng = std::mt19937_64;

/// Independent random streams derived from one root seed. Each consumer owns a
/// fixed stream id so adding a consumer never perturbs the others.
enum class Stream : std::uint64_t {
  Pool = 1,
  Oracle = 2,
  Verify = 3,
  Covert = 4,
  Payload = 5,
  Victim = 6,
  Profile = 7,
  MonteCarlo = 8,
  Probe = 9,
  Histogram = 10,
  Tuples = 11,
  Simulate = 12,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ (static_cast<std::uint64_t>(stream) << 56)) + index);
}

}  // namespace drama
