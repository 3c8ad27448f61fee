#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace weavesim {

using Rng = std::mt19937_64;
// Ziggurat sampler; several times faster than the polar method in libstdc++.
using NormalDist = boost::random::normal_distribution<double>;

// Stream domains keep substreams of different consumers disjoint.
enum class StreamDomain : std::uint64_t {
  kUsers = 1,
  kRayleigh = 2,
  kPilotNoise = 3,
  kPacket = 4,
  kCalibration = 5,
  kProfile = 6,
};

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent engine from (seed, domain, counters). The result
// depends only on its arguments, never on evaluation order.
inline Rng substream(std::uint64_t seed, StreamDomain domain,
                     std::initializer_list<std::uint64_t> counters) {
  std::uint64_t key = mix64(seed ^ mix64(static_cast<std::uint64_t>(domain)));
  for (std::uint64_t c : counters) key = mix64(key ^ mix64(c + 0x632be59bd9b4e019ULL));
  return Rng(key);
}

}  // namespace weavesim
