#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specdec {

enum class ErrorCode {
  EmptyDraft,
  MalformedTree,
  MergeMismatch,
  MaskMismatch,
  TraceExhausted,
  TraceDiverged,
  TraceParseError,
  TranscriptMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the engine carries a code so callers (and the CLI's
// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace specdec
