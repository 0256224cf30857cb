#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridbn {

/// Machine-readable category carried by every library error.
enum class ErrorCode {
  kValidation,
  kParameter,
  kUnsupportedStructure,
  kCycle,
  kImpossibleEvidence,
  kNotFound,
  kRefused,
  kSchema,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gridbn
