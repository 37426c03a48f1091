#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moodspring {

enum class ErrorCode {
  InvalidInput,
  TooShort,
  InsufficientData,
  InsufficientGroups,
  FormatError,
  NumericalError,
  ConfigError,
  SessionNotFound,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the whole engine; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace moodspring
