#pragma once

#include <cstdint>
#include <random>

namespace keyforge {

using Rng = std::mt19937_64;

// Independent stream for (seed, index, purpose). Sessions generated serially or
// in parallel draw identical values because nothing is shared between streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t purpose = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    purpose};
  return Rng(seq);
}

// Stream purposes. Keep values stable: they are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint32_t kSession = 0;
inline constexpr std::uint32_t kSessionLength = 1;
inline constexpr std::uint32_t kInit = 2;
inline constexpr std::uint32_t kShuffle = 3;
inline constexpr std::uint32_t kSplit = 4;
inline constexpr std::uint32_t kPatch = 5;
inline constexpr std::uint32_t kFold = 6;
inline constexpr std::uint32_t kGradCheck = 7;
}  // namespace stream

}  // namespace keyforge
