#pragma once

#include <stdexcept>
#include <string>

namespace lovit {

enum class ErrorCode {
  io_failure,
  bad_magic,
  bad_version,
  truncated,
  shape_mismatch,
  missing_tensor,
  duplicate_tensor,
  unexpected_tensor,
  bad_format,
};

const char* to_string(ErrorCode code) noexcept;

// Raised by every file reader/validator; `code()` distinguishes the failure.
class FormatError : public std::runtime_error {
 public:
  FormatError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lovit
