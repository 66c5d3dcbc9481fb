#include "elicit/error.hpp"

namespace elicit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::empty_repository: return "empty_repository";
    case ErrorCode::empty_evaluation_text: return "empty_evaluation_text";
    case ErrorCode::no_conversation: return "no_conversation";
    case ErrorCode::tone_service_unavailable: return "tone_service_unavailable";
    case ErrorCode::degenerate_ties: return "degenerate_ties";
    case ErrorCode::missing_reference: return "missing_reference";
    case ErrorCode::fingerprint_mismatch: return "fingerprint_mismatch";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::not_found: return "not_found";
  }
  return "unknown";
}

}  // namespace elicit
