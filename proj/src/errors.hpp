#pragma once

#include <stdexcept>
#include <string>

namespace pkdga {

// Numeric values double as C API status codes.
enum class ErrorCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kRange = 4,
  kAssembly = 5,
  kContract = 6,
  kTraining = 7,
  kUnsupported = 8,
  kBudget = 9,
  kIo = 10,
  kRoundFailure = 11,
};

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

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace pkdga
