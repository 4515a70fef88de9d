#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <type_traits>
#include <vector>

#include "gci/common/error.hpp"
#include "gci/deliberation/session.hpp"

namespace gci::service {

struct StoreOptions {
  std::filesystem::path data_dir;
  std::size_t snapshot_every = 100;  // 0 disables snapshots
};

/// Raised for sessions whose logs failed verification at startup.
class QuarantinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-backed sessions. Each session lives in <data_dir>/sessions/<id>/
/// as events.jsonl (the source of truth) plus an optional snapshot.json.
///
/// Mutations hold the session's exclusive lock, run against the in-memory
/// session, then append and fsync every new event before returning, so a
/// caller that acknowledges after `write` never acknowledges an event that
/// is not on disk. Reads take the shared lock.
class SessionStore {
 public:
  /// Recovers every session under the data directory. Logs that fail
  /// verification are quarantined rather than dropped; a torn final line
  /// (an append that never completed, hence never acknowledged) is trimmed.
  explicit SessionStore(StoreOptions options);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  /// Server-side secret used to derive bearer tokens; created on first use.
  const std::string& secret() const { return secret_; }

  /// Creates and durably logs a new session under `id`.
  void create(const std::string& id, const deliberation::SessionConfig& config,
                     const deliberation::ParticipantId& facilitator,
                     const std::string& credential_digest, const std::string& token_digest);

  template <typename F>
  auto read(const std::string& id, F&& f) {
    auto& slot = find(id);
    std::shared_lock lock(slot.mutex);
    return f(static_cast<const deliberation::Session&>(*slot.session));
  }

  template <typename F>
  auto write(const std::string& id, F&& f) {
    auto& slot = find(id);
    std::unique_lock lock(slot.mutex);
    if (slot.failed) throw std::runtime_error("session storage failed; read-only");
    try {
      if constexpr (std::is_void_v<decltype(f(*slot.session))>) {
        f(*slot.session);
        persist(slot);
      } else {
        auto result = f(*slot.session);
        persist(slot);
        return result;
      }
    } catch (...) {
      // Events committed before a later failure inside `f` still belong on
      // disk; persist raises on its own if that is impossible.
      if (slot.session->log().size() != slot.persisted) persist(slot);
      throw;
    }
  }

  std::vector<std::string> session_ids() const;
  /// Quarantined session ids with the verification failure.
  std::map<std::string, std::string> quarantined() const;
  const std::filesystem::path& data_dir() const { return options_.data_dir; }

 private:
  struct Slot {
    std::shared_mutex mutex;
    std::optional<deliberation::Session> session;
    std::filesystem::path dir;
    int fd = -1;
    std::size_t persisted = 0;
    std::size_t snapshot_at = 0;
    bool failed = false;
  };

  Slot& find(const std::string& id);
  void recover_one(const std::filesystem::path& dir);
  void persist(Slot& slot);
  void write_snapshot(Slot& slot);
  void open_log(Slot& slot);

  StoreOptions options_;
  std::string secret_;
  mutable std::shared_mutex slots_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::map<std::string, std::string> quarantined_;
};

}  // namespace gci::service
