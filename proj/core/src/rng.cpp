#include "deepsel/rng.hpp"

#include "deepsel/errors.hpp"

namespace deepsel {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          StreamPurpose purpose) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kTrajectoryTooShort: return "trajectory-too-short";
    case ErrorKind::kIndexOutOfRange: return "index-out-of-range";
    case ErrorKind::kUnknownKind: return "unknown-kind";
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kNonFiniteState: return "non-finite-state";
    case ErrorKind::kNumericalBreakdown: return "numerical-breakdown";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kMissingModel: return "missing-model";
  }
  return "unknown";
}

}  // namespace deepsel
