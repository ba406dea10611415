#include "narz/error.hpp"

namespace narz {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::NonpositiveSupport: return "NonpositiveSupport";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NonAdjacentMerge: return "NonAdjacentMerge";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::BadMassRule: return "BadMassRule";
    case ErrorCode::InsufficientSnapshots: return "InsufficientSnapshots";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace narz
