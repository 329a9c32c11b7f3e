#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qudash {

enum class ErrorCode {
  kIndexOutOfRange,
  kLengthMismatch,
  kInvalidArgument,
  kInfeasibleBound,
  kTooManyVariables,
  kInvalidConfig,
  kTraceExhausted,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Structured error carried by every module. The code identifies the failure
// class; what() carries a human-readable message with the offending value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qudash
