#include "gci/deliberation/event_log.hpp"

#include <istream>
#include <ostream>

#include "gci/common/sha256.hpp"

namespace gci::deliberation {

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::session_created, "session-created"},
    {EventKind::participant_joined, "participant-joined"},
    {EventKind::idea_submitted, "idea-submitted"},
    {EventKind::task_assigned, "task-assigned"},
    {EventKind::judgment_recorded, "judgment-recorded"},
    {EventKind::criterion_scored, "criterion-scored"},
    {EventKind::phase_changed, "phase-changed"},
};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  throw Error(ErrorCode::malformed, "unknown event kind: " + std::string(text));
}

std::string canonical_json(const nlohmann::json& value) {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

std::string chain_hash(std::string_view prev_hash, const nlohmann::json& payload) {
  std::string bytes(prev_hash);
  bytes += canonical_json(payload);
  return sha256_hex(bytes);
}

void verify_chain(std::span<const SessionEvent> events) {
  std::string prev = kGenesisHash;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.seq != i) {
      throw IntegrityError(ErrorCode::sequence_gap, i,
                           "sequence gap: expected " + std::to_string(i) + ", found " +
                               std::to_string(e.seq));
    }
    if (e.prev_hash != prev || e.hash != chain_hash(prev, e.payload)) {
      throw IntegrityError(ErrorCode::broken_chain, i,
                           "hash chain broken at sequence " + std::to_string(i));
    }
    prev = e.hash;
  }
}

EventLog::EventLog(std::vector<SessionEvent> events) : events_(std::move(events)) {}

const SessionEvent& EventLog::append(EventKind kind, nlohmann::json payload) {
  SessionEvent e;
  e.seq = events_.size();
  e.kind = kind;
  e.prev_hash = head_hash();
  e.hash = chain_hash(e.prev_hash, payload);
  e.payload = std::move(payload);
  events_.push_back(std::move(e));
  return events_.back();
}

nlohmann::json to_json(const SessionEvent& e) {
  return {{"seq", e.seq},
          {"kind", std::string(to_string(e.kind))},
          {"payload", e.payload},
          {"prev_hash", e.prev_hash},
          {"hash", e.hash}};
}

std::string to_jsonl_line(const SessionEvent& event) { return canonical_json(to_json(event)); }

SessionEvent parse_jsonl_line(std::string_view line, std::uint64_t expected_seq) {
  auto bad = [&](const std::string& why) {
    return IntegrityError(ErrorCode::broken_chain, expected_seq,
                          "undecodable event at sequence " + std::to_string(expected_seq) +
                              ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  }
  SessionEvent event;
  try {
    if (!j.is_object() || j.size() != 5) throw bad("unexpected fields");
    event.seq = j.at("seq").get<std::uint64_t>();
    event.kind = parse_event_kind(j.at("kind").get<std::string>());
    event.payload = j.at("payload");
    event.prev_hash = j.at("prev_hash").get<std::string>();
    event.hash = j.at("hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  } catch (const IntegrityError&) {
    throw;
  } catch (const Error& e) {
    throw bad(e.what());
  }
  // Equivalent-but-different encodings (e.g. 1e0 for 1.0) would slip past the
  // payload hash, so the stored bytes must be exactly canonical.
  if (to_jsonl_line(event) != line) throw bad("non-canonical encoding");
  return event;
}

void write_jsonl(std::ostream& out, std::span<const SessionEvent> events) {
  for (const auto& e : events) out << to_jsonl_line(e) << '\n';
}

std::vector<SessionEvent> read_jsonl(std::istream& in) {
  std::vector<SessionEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(parse_jsonl_line(line, events.size()));
  }
  verify_chain(events);
  return events;
}

}  // namespace gci::deliberation
