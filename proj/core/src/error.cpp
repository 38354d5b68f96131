#include "neqresponse/error.hpp"

namespace neqresponse {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NegativeRate: return "NegativeRate";
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::ModelTooLarge: return "ModelTooLarge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::NonFiniteTime: return "NonFiniteTime";
    case ErrorKind::TimeOrder: return "TimeOrder";
    case ErrorKind::ZeroProbabilityState: return "ZeroProbabilityState";
    case ErrorKind::ScheduleDomain: return "ScheduleDomain";
    case ErrorKind::MissingReverseEdge: return "MissingReverseEdge";
    case ErrorKind::NotStationary: return "NotStationary";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::UnboundedSchedule: return "UnboundedSchedule";
    case ErrorKind::ZeroMassState: return "ZeroMassState";
    case ErrorKind::InfiniteRate: return "InfiniteRate";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::AsymmetricPsi: return "AsymmetricPsi";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SolverFailure:
    case ErrorKind::QuadratureFailure:
    case ErrorKind::StepSizeUnderflow:
    case ErrorKind::MaxIterations:
    case ErrorKind::InfiniteRate:
      return 3;
    case ErrorKind::FileNotFound:
    case ErrorKind::IoError:
      return 4;
    default:
      return 2;
  }
}

Error::Error(ErrorKind kind, std::string_view module, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      module_(module),
      message_(message) {}

}  // namespace neqresponse
