#include "gci/common/error.hpp"

namespace gci {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::no_comparisons: return "no_comparisons";
    case ErrorCode::degenerate_pair: return "degenerate_pair";
    case ErrorCode::unknown_item: return "unknown_item";
    case ErrorCode::unknown_participant: return "unknown_participant";
    case ErrorCode::unknown_agent: return "unknown_agent";
    case ErrorCode::phase_conflict: return "phase_conflict";
    case ErrorCode::unassigned_pair: return "unassigned_pair";
    case ErrorCode::duplicate_judgment: return "duplicate_judgment";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::broken_chain: return "broken_chain";
    case ErrorCode::sequence_gap: return "sequence_gap";
    case ErrorCode::missing_session_created: return "missing_session_created";
    case ErrorCode::malformed: return "malformed";
    case ErrorCode::forbidden: return "forbidden";
  }
  return "unknown";
}

}  // namespace gci
