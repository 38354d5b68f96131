#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace neqresponse {

enum class ErrorKind {
  InvalidArgument,
  NegativeRate,
  DuplicateEdge,
  NotIrreducible,
  ModelTooLarge,
  DimensionMismatch,
  SolverFailure,
  NonFiniteTime,
  TimeOrder,
  ZeroProbabilityState,
  ScheduleDomain,
  MissingReverseEdge,
  NotStationary,
  QuadratureFailure,
  StepSizeUnderflow,
  UnboundedSchedule,
  ZeroMassState,
  InfiniteRate,
  MaxIterations,
  AsymmetricPsi,
  ParseError,
  SchemaError,
  UsageError,
  FileNotFound,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit status the CLI maps an error kind to:
/// 2 for validation problems, 3 for numerical failures, 4 for I/O.
int exit_code(ErrorKind kind) noexcept;

/// Every library failure is reported through this type. `what()` reads
/// "<Kind>: <message>" so it can be printed as a one-line reason.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view module, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string message_;
};

}  // namespace neqresponse
