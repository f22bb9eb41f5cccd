#include "legalqa/error.hpp"

namespace legalqa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::empty_graph: return "empty_graph";
    case ErrorCode::merge_conflict: return "merge_conflict";
    case ErrorCode::lookup_error: return "lookup_error";
    case ErrorCode::protocol_error: return "protocol_error";
    case ErrorCode::provider_unavailable: return "provider_unavailable";
    case ErrorCode::fixture_miss: return "fixture_miss";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::state_error: return "state_error";
    case ErrorCode::incomplete_submission: return "incomplete_submission";
    case ErrorCode::unsupported_region: return "unsupported_region";
    case ErrorCode::no_provisions: return "no_provisions";
    case ErrorCode::degenerate_vector: return "degenerate_vector";
    case ErrorCode::environment_exhausted: return "environment_exhausted";
    case ErrorCode::no_match: return "no_match";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::not_found: return "not_found";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

void fail_retryable(const std::string& message) {
  throw Error(ErrorCode::provider_unavailable, message, true);
}

}  // namespace legalqa
