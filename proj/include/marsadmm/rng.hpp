#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace marsadmm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed splitting rule: stream seed = splitmix64(seed ^ splitmix64(fnv1a(role))).
/// Every consumer of randomness (data generation, initialization, sampling)
/// gets its own role tag so the streams are independent of one another.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : role) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

inline Rng make_stream(std::uint64_t seed, std::string_view role) {
  return Rng(derive_seed(seed, role));
}

}  // namespace marsadmm
