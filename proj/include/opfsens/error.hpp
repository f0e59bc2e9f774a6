#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opfsens {

/// Error categories surfaced by the library. The names double as the
/// machine-readable `kind` field of CLI error objects.
enum class ErrorKind {
  MalformedMatrix,
  MissingTable,
  DanglingReference,
  DisconnectedGraph,
  ZeroReactance,
  DuplicateGeneratorBus,
  InvalidLimits,
  InvalidTie,
  DisconnectedChain,
  InvalidConfig,
  Singular,
  DimensionMismatch,
  Infeasible,
  Unbounded,
  NumericalFailure,
  DegeneratePoint,
  DependentBindings,
  CardinalityViolation,
  RegionBoundary,
  NoValidSet,
  EmptyLoadSet,
  NoPath,
  InvalidIndex,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace opfsens
