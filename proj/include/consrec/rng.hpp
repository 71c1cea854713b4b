#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace consrec {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// All randomness flows from one base seed; each stage draws from its own
// named stream so adding a stage never perturbs the others.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::string_view stage) {
  std::uint64_t mixed = seed ^ (fnv1a64(stage) * 0x9e3779b97f4a7c15ULL);
  return std::mt19937_64(mixed);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::string_view stage,
                                  std::uint64_t index) {
  std::uint64_t mixed = seed ^ (fnv1a64(stage) * 0x9e3779b97f4a7c15ULL);
  mixed ^= (index + 1) * 0xbf58476d1ce4e5b9ULL;
  return std::mt19937_64(mixed);
}

}  // namespace consrec
