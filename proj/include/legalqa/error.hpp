#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace legalqa {

/// Machine-readable failure categories. The HTTP layer and the web client
/// depend only on these codes, never on message text.
enum class ErrorCode {
  invalid_argument,
  parse_error,
  empty_graph,
  merge_conflict,
  lookup_error,
  protocol_error,
  provider_unavailable,
  fixture_miss,
  config_error,
  state_error,
  incomplete_submission,
  unsupported_region,
  no_provisions,
  degenerate_vector,
  environment_exhausted,
  no_match,
  divergence,
  io_error,
  not_found,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, bool retryable = false)
      : std::runtime_error(message), code_(code), retryable_(retryable) {}

  ErrorCode code() const noexcept { return code_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  ErrorCode code_;
  bool retryable_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

/// Throws a retryable provider_unavailable error.
[[noreturn]] void fail_retryable(const std::string& message);

}  // namespace legalqa
