#include "gci/deliberation/export.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "gci/common/error.hpp"

namespace gci::deliberation {

void write_voice_csv(std::ostream& out, const CollectiveVoice& voice) {
  out << "rank,item,mean,topk_prob\n";
  const auto old = out.precision(12);
  for (std::size_t r = 0; r < voice.entries.size(); ++r) {
    const auto& e = voice.entries[r];
    out << r + 1 << ',' << e.item << ',' << e.mean << ',' << e.topk_probability << '\n';
  }
  out.precision(old);
}

nlohmann::json session_summary(const Session& session) {
  return {{"session_id", session.id()},
          {"config", to_json(session.config())},
          {"phase", std::string(to_string(session.phase()))},
          {"event_count", session.log().size()},
          {"head_hash", session.log().head_hash()},
          {"state_hash", session.state_hash()},
          {"state", session.snapshot()}};
}

void export_bundle(const Session& session, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("session.json");
    out << session_summary(session).dump(2) << '\n';
  }
  {
    auto out = open("events.jsonl");
    write_jsonl(out, session.log().events());
  }
  {
    auto out = open("voice.csv");
    write_voice_csv(out, session.collective_voice());
  }
}

Session import_bundle(const std::filesystem::path& dir) {
  std::ifstream events_in(dir / "events.jsonl", std::ios::binary);
  if (!events_in) throw Error(ErrorCode::malformed, "missing events.jsonl");
  auto session = Session::replay(read_jsonl(events_in));
  std::ifstream summary_in(dir / "session.json");
  if (summary_in) {
    const auto summary = nlohmann::json::parse(summary_in, nullptr, false);
    if (summary.is_discarded() || !summary.contains("state_hash")) {
      throw Error(ErrorCode::malformed, "unreadable session.json");
    }
    if (summary.at("state_hash").get<std::string>() != session.state_hash()) {
      throw Error(ErrorCode::broken_chain, "replayed state differs from exported state");
    }
  }
  return session;
}

}  // namespace gci::deliberation
