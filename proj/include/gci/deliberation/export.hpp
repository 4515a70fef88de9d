#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "gci/deliberation/session.hpp"

namespace gci::deliberation {

/// rank,item,mean,topk_prob with ranks starting at 1.
void write_voice_csv(std::ostream& out, const CollectiveVoice& voice);

/// Config, final state and its hash.
nlohmann::json session_summary(const Session& session);

/// Writes session.json, events.jsonl and voice.csv into `dir` (created if
/// needed).
void export_bundle(const Session& session, const std::filesystem::path& dir);

/// Replays the bundle's events.jsonl and checks the replayed state hash
/// against session.json.
Session import_bundle(const std::filesystem::path& dir);

}  // namespace gci::deliberation
