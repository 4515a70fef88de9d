#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gci {

enum class ErrorCode {
  invalid_argument,
  no_comparisons,
  degenerate_pair,
  unknown_item,
  unknown_participant,
  unknown_agent,
  phase_conflict,
  unassigned_pair,
  duplicate_judgment,
  not_converged,
  broken_chain,
  sequence_gap,
  missing_session_created,
  malformed,
  forbidden,
};

std::string_view to_string(ErrorCode code);

/// Domain failure carrying a machine-readable code. The service maps codes
/// onto HTTP statuses; the CLI maps them onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gci
