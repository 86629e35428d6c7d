#pragma once

#include <stdexcept>
#include <string>

namespace hsicgsa {

enum class ErrorCode {
  InvalidParameter,
  Domain,
  Degenerate,
  SupportViolation,
  SizeMismatch,
  Unsupported,
  HeavyTail,
  ModelFailure,
  Parse,
  Schema,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// that front ends can map it to a distinct exit status.
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

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace hsicgsa
