#include "cma/error.hpp"

namespace cma {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::AllocationFailure: return "allocation-failure";
    case ErrorCode::InvalidMark: return "invalid-mark";
    case ErrorCode::InvalidFree: return "invalid-free";
    case ErrorCode::Accounting: return "accounting";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Sampling: return "sampling";
    case ErrorCode::Analysis: return "analysis";
    case ErrorCode::Precondition: return "precondition-failure";
    case ErrorCode::Workload: return "workload-failure";
    case ErrorCode::ProfileMissing: return "profile-missing";
    case ErrorCode::Comparison: return "comparison";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace cma
