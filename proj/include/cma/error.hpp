#pragma once

#include <stdexcept>
#include <string>

namespace cma {

enum class ErrorCode {
  InvalidArgument = 1,
  AllocationFailure,
  InvalidMark,
  InvalidFree,
  Accounting,
  Parse,
  Validation,
  Sampling,
  Analysis,
  Precondition,
  Workload,
  ProfileMissing,
  Comparison,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C layer can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cma
