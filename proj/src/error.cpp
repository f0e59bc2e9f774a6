#include "opfsens/error.hpp"

namespace opfsens {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedMatrix: return "MalformedMatrix";
    case ErrorKind::MissingTable: return "MissingTable";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::ZeroReactance: return "ZeroReactance";
    case ErrorKind::DuplicateGeneratorBus: return "DuplicateGeneratorBus";
    case ErrorKind::InvalidLimits: return "InvalidLimits";
    case ErrorKind::InvalidTie: return "InvalidTie";
    case ErrorKind::DisconnectedChain: return "DisconnectedChain";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DegeneratePoint: return "DegeneratePoint";
    case ErrorKind::DependentBindings: return "DependentBindings";
    case ErrorKind::CardinalityViolation: return "CardinalityViolation";
    case ErrorKind::RegionBoundary: return "RegionBoundary";
    case ErrorKind::NoValidSet: return "NoValidSet";
    case ErrorKind::EmptyLoadSet: return "EmptyLoadSet";
    case ErrorKind::NoPath: return "NoPath";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace opfsens
