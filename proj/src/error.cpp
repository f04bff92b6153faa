#include "proxydiff/error.hpp"

namespace proxydiff {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::NotVerified: return "NotVerified";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string describe_missing(const std::vector<std::string>& missing) {
  std::string msg = "response is missing required keys:";
  for (const auto& key : missing) msg += " " + key;
  return msg;
}

}  // namespace

SchemaViolation::SchemaViolation(std::vector<std::string> missing)
    : Error(ErrorCode::SchemaViolation, describe_missing(missing)),
      missing_(std::move(missing)) {}

}  // namespace proxydiff
