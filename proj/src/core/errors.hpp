#pragma once

#include <stdexcept>
#include <string>

namespace cmjsim {

// Error codes shared with the C API and the CLI exit codes.
enum class ErrorCode : int {
  Ok = 0,
  Config = 2,
  Range = 3,
  Internal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Invalid argument / descriptor / precondition violation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

// Value leaves the representable range of the working real type or the
// exact-arithmetic budget.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(ErrorCode::Range, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorCode::Internal, what) {}
};

}  // namespace cmjsim
