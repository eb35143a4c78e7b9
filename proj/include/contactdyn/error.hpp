#pragma once

#include <stdexcept>
#include <string>

namespace contactdyn {

// Error categories double as CLI exit codes.
enum class ErrorCode : int {
  kGeneric = 1,
  kUsage = 2,
  kMissingFile = 3,
  kConfig = 4,
  kDomainMismatch = 5,
  kFormat = 6,
  kShape = 7,
  kNonFinite = 8,
  kInvalidArgument = 9,
  kInstability = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kDomainMismatch: return "domain_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInstability: return "instability";
    default: return "error";
  }
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace contactdyn
