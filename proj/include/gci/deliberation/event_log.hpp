#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gci/common/error.hpp"

namespace gci::deliberation {

enum class EventKind {
  session_created,
  participant_joined,
  idea_submitted,
  task_assigned,
  judgment_recorded,
  criterion_scored,
  phase_changed,
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

/// One immutable entry of a session's audit trail.
struct SessionEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::session_created;
  nlohmann::json payload;
  std::string prev_hash;
  std::string hash;
};

/// prev_hash of the first event.
inline const std::string kGenesisHash(64, '0');

/// Sorted keys, no insignificant whitespace, shortest round-trip numbers.
std::string canonical_json(const nlohmann::json& value);

/// SHA-256 hex over prev_hash followed by the canonical payload bytes.
std::string chain_hash(std::string_view prev_hash, const nlohmann::json& payload);

/// Raised when a log fails verification; carries the first bad sequence number.
class IntegrityError : public Error {
 public:
  IntegrityError(ErrorCode code, std::uint64_t sequence, const std::string& message)
      : Error(code, message), sequence_(sequence) {}
  std::uint64_t sequence() const noexcept { return sequence_; }

 private:
  std::uint64_t sequence_;
};

/// Checks contiguous sequence numbers from 0 and the hash chain end to end.
void verify_chain(std::span<const SessionEvent> events);

/// Append-only, hash-chained event sequence.
class EventLog {
 public:
  EventLog() = default;

  /// Adopts already-verified events.
  explicit EventLog(std::vector<SessionEvent> events);

  const SessionEvent& append(EventKind kind, nlohmann::json payload);

  const std::vector<SessionEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const std::string& head_hash() const {
    return events_.empty() ? kGenesisHash : events_.back().hash;
  }

 private:
  std::vector<SessionEvent> events_;
};

nlohmann::json to_json(const SessionEvent& event);

/// The exact JSON Lines record for `event` (no trailing newline).
std::string to_jsonl_line(const SessionEvent& event);

/// Parses one JSON Lines record. `expected_seq` is reported when the line
/// cannot be decoded or is not in canonical form.
SessionEvent parse_jsonl_line(std::string_view line, std::uint64_t expected_seq);

void write_jsonl(std::ostream& out, std::span<const SessionEvent> events);

/// Reads and verifies a whole log. Any decoding failure, non-canonical
/// encoding, sequence gap or hash mismatch raises IntegrityError naming the
/// first bad sequence number.
std::vector<SessionEvent> read_jsonl(std::istream& in);

}  // namespace gci::deliberation
