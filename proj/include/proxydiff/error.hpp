#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proxydiff {

enum class ErrorCode {
  MalformedDocument,
  SpanOutOfRange,
  ParseError,
  MalformedLog,
  InsufficientHistory,
  NotVerified,
  NetworkError,
  NoJsonFound,
  SchemaViolation,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code; callers
// that need to branch (exit codes, downgrade paths) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SchemaViolation : public Error {
 public:
  explicit SchemaViolation(std::vector<std::string> missing);

  const std::vector<std::string>& missing_keys() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace proxydiff
