#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace deepsel {

using Rng = std::mt19937_64;

/// Purposes for derived random streams. Each (master, index, purpose)
/// triple yields an independent stream regardless of evaluation order.
enum class StreamPurpose : std::uint64_t {
  kCollection = 1,
  kReset = 2,
  kInitial = 3,
  kReference = 4,
  kIndicator = 5,
  kNoise = 6,
  kShuffle = 7,
  kInit = 8,
  kSplit = 9,
  kSelection = 10,
  kScenario = 11,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          StreamPurpose purpose) noexcept;

inline Rng make_rng(std::uint64_t master, std::uint64_t index,
                    StreamPurpose purpose) {
  return Rng(derive_seed(master, index, purpose));
}

}  // namespace deepsel
