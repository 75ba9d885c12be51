#pragma once

#include <stdexcept>
#include <string>

namespace deepsel {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kTrajectoryTooShort,
  kIndexOutOfRange,
  kUnknownKind,
  kInvalidParameter,
  kNonFiniteState,
  kNumericalBreakdown,
  kDivergence,
  kIo,
  kFormat,
  kConfig,
  kMissingModel,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by rollouts when the plant state stops being finite.
class NonFiniteStateError : public Error {
 public:
  NonFiniteStateError(std::size_t step, const std::string& what)
      : Error(ErrorKind::kNonFiniteState, what), step_(step) {}

  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace deepsel
