#pragma once

#include <cstdint>
#include <random>

namespace evsel {

// Counter-based seed derivation: every (seed, id...) pair maps to an
// independent engine, so parallel and serial execution draw identical
// streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id) {
  return splitmix64(splitmix64(seed) ^ splitmix64(id + 0x632be59bd9b4e019ull));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id_a, std::uint64_t id_b) {
  return mix_seed(mix_seed(seed, id_a), id_b);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id) {
  return std::mt19937_64(mix_seed(seed, id));
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id_a, std::uint64_t id_b) {
  return std::mt19937_64(mix_seed(seed, id_a, id_b));
}

// Stream ids for the pipeline stages. Keeping them in one place avoids
// accidental stream collisions between modules.
namespace stream {
inline constexpr std::uint64_t kEnsembleT = 101;
inline constexpr std::uint64_t kEnsembleT1 = 102;
inline constexpr std::uint64_t kDirections = 103;
inline constexpr std::uint64_t kWeightRedraw = 104;
inline constexpr std::uint64_t kSimTrain = 201;
inline constexpr std::uint64_t kSimTest = 202;
}  // namespace stream

}  // namespace evsel
