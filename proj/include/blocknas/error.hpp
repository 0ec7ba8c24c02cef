#pragma once

#include <stdexcept>
#include <string>

namespace blocknas {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kValidation,
  kConfigInvalid,
  kDegenerateNode,
  kCapExceeded,
  kOracleMiss,
  kDuplicateConfig,
  kFingerprintMismatch,
  kUnknownDevice,
  kIo,
};

const char* to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code, so the
// CLI can map it to an exit status and tests can assert on the category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blocknas
