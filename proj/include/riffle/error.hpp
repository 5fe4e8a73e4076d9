#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riffle {

enum class ErrorCode {
  InvalidArgument,
  DegenerateMeasure,
  InvalidChi,
  NoBracket,
  AllZero,
  VertexPoint,
  NotInPsiClass,
  CounterexampleFailed,
  ScaleTooSmall,
  SizeMismatch,
  TooLarge,
  TooFewSteps,
  DegenerateMixture,
  QuotaInfeasible,
  InvalidParams,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception; carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace riffle
