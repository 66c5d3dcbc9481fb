#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elicit {

enum class ErrorCode {
  invalid_argument,
  empty_repository,
  empty_evaluation_text,
  no_conversation,
  tone_service_unavailable,
  degenerate_ties,
  missing_reference,
  fingerprint_mismatch,
  io,
  parse,
  not_found,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the engine; `code()` lets the service map
/// failures to HTTP statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace elicit
