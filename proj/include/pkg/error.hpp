#pragma once

#include <stdexcept>
#include <string>

namespace pkg {

enum class ErrorCode {
  Io,
  Parse,
  DuplicateAdmission,
  InvalidWindow,
  SampleTooLarge,
  UnsupportedVersion,
  Shape,
  Numeric,
  InvalidNode,
  DegenerateSplit,
  EmptyEvaluation,
  InvalidConditionList,
  UndefinedDelta,
  InvalidInput,
  Write,
  OracleTooLarge,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

/// Toolkit exception; what() carries the message without the code name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pkg
