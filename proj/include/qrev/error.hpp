#pragma once

#include <stdexcept>
#include <string>

namespace qrev {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotIrreducible,
  SolverDidNotConverge,
  UnsupportedState,
  NotStationary,
  NotStochastic,
  NotBirthDeath,
  ZeroDownRate,
  UnreachableState,
  OverlappingBlocks,
  NegativeFunctionValue,
  ZeroWeightState,
  NonPositiveRate,
  InvalidDistribution,
  SymmetryViolated,
  StateSpaceTooLarge,
  KernelNotStochastic,
  RoutingNotStochastic,
  NoPositiveSolution,
  ZeroWeightType,
  ZeroPhi,
  InternalBalanceViolated,
  ArrivalConsistencyFailed,
  BatchSizeNotConserved,
  NodeNotQuasiReversible,
  NoConvergence,
  ProductSpaceTooLarge,
  BadRouting,
  AbsorbingStateReached,
  UnknownLabel,
  TooFewSamples,
  SchemaError,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code distinguishes failure modes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qrev
