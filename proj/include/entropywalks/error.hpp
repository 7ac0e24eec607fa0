#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ew {

enum class ErrorCode {
  InvalidArgument,
  EmptySupport,
  ArityMismatch,
  NegativeWeight,
  DuplicateKey,
  NegativeCoordinate,
  NonpositiveField,
  ZeroMassCondition,
  ArityOutOfRange,
  ZeroMassRow,
  StateSpaceTooLarge,
  MoveBudgetExceeded,
  InvalidStart,
  DimensionMismatch,
  NonReversibleKernel,
  DegenerateBase,
  EllTooLarge,
  NotErgodic,
  IterationCapExceeded,
  NonpositiveRho,
  SupportMismatch,
  NegativeFunction,
  InfeasibleMarginal,
  NoConvergence,
  NumericalBreakdown,
  ContractionNotCertified,
  AsymmetricMatrix,
  NormTooLarge,
  ConfigParseError,
  InputNotFound,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ew
