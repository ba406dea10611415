#pragma once

#include <stdexcept>
#include <string>

namespace narz {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  UnknownFamily,
  NonpositiveSupport,
  QuadratureFailure,
  NonAdjacentMerge,
  StepSizeUnderflow,
  GridMismatch,
  BadMassRule,
  InsufficientSnapshots,
  ParseError,
  ValidationError,
  IoError,
  Internal,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace narz
