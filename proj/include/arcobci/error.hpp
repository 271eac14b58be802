#pragma once

#include <stdexcept>
#include <string>

namespace arcobci {

enum class ErrorCode {
  DuplicateIndex,
  IndexOutOfRange,
  InvalidArgument,
  EmptyRemaining,
  WeightMismatch,
  FactorizationFailure,
  NonFiniteObjective,
  AllNegInfinite,
  UnknownVariable,
  TooFewSamples,
  UnknownQuery,
  DimensionMismatch,
  ConfigError,
  IoError,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace arcobci
