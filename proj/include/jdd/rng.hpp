#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>

namespace jdd {

/// 64-bit Mersenne Twister. Distributions are taken from Boost.Random, whose
/// algorithms are fixed in the headers, so a seed reproduces the same stream
/// on every platform.
using Rng = boost::random::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over bytes.
[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view bytes,
                                            std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Seed for a named sub-stream of a parent seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                                  std::string_view label) noexcept {
  return mix64(fnv1a(label, mix64(parent)));
}

}  // namespace jdd
