#ifndef LOFT_HASH_H_
#define LOFT_HASH_H_

#include <cstdint>

#include "loft/types.h"

namespace loft {

// 64-bit finalizer from MurmurHash3.
inline constexpr std::uint64_t Fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

// Seed of the hash function used in global minor cycle m (= j * Z + k).
inline constexpr std::uint64_t MinorSeed(std::uint64_t base_seed,
                                         std::uint64_t minor_global) {
  return Fmix64(base_seed ^ Fmix64(minor_global + 0x9e3779b97f4a7c15ULL));
}

// Maps a 64-bit value uniformly onto [0, width).
inline constexpr std::uint32_t FastRange(std::uint64_t h, std::uint32_t width) {
  return static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(h) * width) >> 64);
}

inline constexpr std::uint64_t HashFlow64(std::uint64_t seed, FlowId flow) {
  return Fmix64(flow ^ seed);
}

inline constexpr std::uint32_t HashFlow(std::uint64_t seed, FlowId flow,
                                        std::uint32_t width) {
  return FastRange(HashFlow64(seed, flow), width);
}

}  // namespace loft

#endif  // LOFT_HASH_H_
