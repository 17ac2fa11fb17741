#include "specdec/error.hpp"

namespace specdec {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDraft: return "EmptyDraft";
    case ErrorCode::MalformedTree: return "MalformedTree";
    case ErrorCode::MergeMismatch: return "MergeMismatch";
    case ErrorCode::MaskMismatch: return "MaskMismatch";
    case ErrorCode::TraceExhausted: return "TraceExhausted";
    case ErrorCode::TraceDiverged: return "TraceDiverged";
    case ErrorCode::TraceParseError: return "TraceParseError";
    case ErrorCode::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace specdec
