#pragma once

#include <stdexcept>
#include <string>

namespace ipdp {

// Error taxonomy shared by the library and the CLI exit-code table.
enum class ErrorCategory {
  kUsage,               // bad parameters / malformed flags
  kIo,                  // filesystem, decode/encode failures
  kData,                // unresolvable refs, deficient sampling pools
  kCheckpointMismatch,  // version or architecture hash refusal
  kProtocol,            // evaluation protocol hygiene violations
  kNumeric,             // non-finite values during optimization
  kInternal,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return "USAGE";
    case ErrorCategory::kIo: return "IO";
    case ErrorCategory::kData: return "DATA";
    case ErrorCategory::kCheckpointMismatch: return "CHECKPOINT_MISMATCH";
    case ErrorCategory::kProtocol: return "PROTOCOL";
    case ErrorCategory::kNumeric: return "NUMERIC";
    case ErrorCategory::kInternal: return "INTERNAL";
  }
  return "INTERNAL";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& msg)
      : std::runtime_error(msg), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

struct ParamError : Error {
  explicit ParamError(const std::string& msg) : Error(ErrorCategory::kUsage, msg) {}
};
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(ErrorCategory::kIo, msg) {}
};
struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(ErrorCategory::kData, msg) {}
};
struct CheckpointMismatchError : Error {
  explicit CheckpointMismatchError(const std::string& msg)
      : Error(ErrorCategory::kCheckpointMismatch, msg) {}
};
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& msg) : Error(ErrorCategory::kProtocol, msg) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(ErrorCategory::kNumeric, msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ParamError(msg);
}

}  // namespace ipdp
