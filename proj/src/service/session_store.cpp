#include "gci/service/session_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gci/common/random.hpp"
#include "gci/deliberation/event_log.hpp"

namespace gci::service {

namespace fs = std::filesystem;
using deliberation::Session;

namespace {

[[noreturn]] void io_failure(const std::string& what, const fs::path& path) {
  throw std::runtime_error(what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("write", path);
    }
    off += static_cast<std::size_t>(n);
  }
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Writes via a temporary file and rename so readers see old or new, whole.
void write_file_atomic(const fs::path& path, const std::string& data, mode_t mode = 0644) {
  const auto tmp = fs::path(path.string() + ".tmp");
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, mode);
  if (fd < 0) io_failure("open", tmp);
  write_all(fd, data, tmp);
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_failure("fsync", tmp);
  }
  ::close(fd);
  fs::rename(tmp, path);
  fsync_dir(path.parent_path());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure("read", path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

SessionStore::SessionStore(StoreOptions options) : options_(std::move(options)) {
  if (options_.data_dir.empty()) throw std::runtime_error("data directory not set");
  std::error_code ec;
  fs::create_directories(options_.data_dir / "sessions", ec);
  if (ec) {
    throw std::runtime_error("cannot use data directory " + options_.data_dir.string() + ": " +
                             ec.message());
  }
  const auto secret_path = options_.data_dir / "secret";
  if (fs::exists(secret_path)) {
    secret_ = read_file(secret_path);
    while (!secret_.empty() && (secret_.back() == '\n' || secret_.back() == '\r')) {
      secret_.pop_back();
    }
  }
  if (secret_.empty()) {
    secret_ = random_hex(32);
    write_file_atomic(secret_path, secret_ + "\n", 0600);
  }
  for (const auto& entry : fs::directory_iterator(options_.data_dir / "sessions")) {
    if (entry.is_directory()) recover_one(entry.path());
  }
}

SessionStore::~SessionStore() {
  for (auto& [_, slot] : slots_) {
    if (slot->fd >= 0) ::close(slot->fd);
  }
}

void SessionStore::recover_one(const fs::path& dir) {
  const auto id = dir.filename().string();
  const auto log_path = dir / "events.jsonl";
  try {
    std::string text = read_file(log_path);
    if (!text.empty() && text.back() != '\n') {
      // Torn tail: the append never completed, so it was never acknowledged.
      const auto cut = text.rfind('\n');
      text.resize(cut == std::string::npos ? 0 : cut + 1);
      fs::resize_file(log_path, text.size());
      std::cerr << "gci: trimmed incomplete trailing event in session " << id << "\n";
    }
    std::istringstream in(text);
    auto events = deliberation::read_jsonl(in);

    std::optional<Session> session;
    const auto snap_path = dir / "snapshot.json";
    if (fs::exists(snap_path)) {
      try {
        session.emplace(Session::restore(nlohmann::json::parse(read_file(snap_path)), events));
      } catch (const std::exception& e) {
        std::cerr << "gci: ignoring snapshot for session " << id << ": " << e.what() << "\n";
      }
    }
    if (!session) session.emplace(Session::replay(events));
    if (session->id() != id) throw Error(ErrorCode::malformed, "session id differs from directory");

    auto slot = std::make_unique<Slot>();
    slot->dir = dir;
    slot->persisted = events.size();
    slot->snapshot_at = events.size();
    slot->session = std::move(session);
    open_log(*slot);
    slots_[id] = std::move(slot);
  } catch (const std::exception& e) {
    quarantined_[id] = e.what();
    std::cerr << "gci: quarantined session " << id << ": " << e.what() << "\n";
  }
}

void SessionStore::open_log(Slot& slot) {
  const auto path = slot.dir / "events.jsonl";
  slot.fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (slot.fd < 0) io_failure("open", path);
}

void SessionStore::create(const std::string& id, const deliberation::SessionConfig& config,
                          const deliberation::ParticipantId& facilitator,
                          const std::string& credential_digest, const std::string& token_digest) {
  if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "session ids are lowercase hex");
  }
  auto slot = std::make_unique<Slot>();
  std::unique_lock lock(slots_mutex_);
  slot->dir = options_.data_dir / "sessions" / id;
  if (slots_.count(id) || quarantined_.count(id) || fs::exists(slot->dir)) {
    throw Error(ErrorCode::invalid_argument, "session id in use");
  }
  slot->session.emplace(Session::create(id, config, facilitator, credential_digest, token_digest));
  fs::create_directories(slot->dir);
  fsync_dir(slot->dir.parent_path());
  open_log(*slot);
  persist(*slot);
  slots_[id] = std::move(slot);
}

SessionStore::Slot& SessionStore::find(const std::string& id) {
  std::shared_lock lock(slots_mutex_);
  auto it = slots_.find(id);
  if (it != slots_.end()) return *it->second;
  auto q = quarantined_.find(id);
  if (q != quarantined_.end()) throw QuarantinedError("session quarantined: " + q->second);
  throw UnknownSessionError("unknown session");
}

void SessionStore::persist(Slot& slot) {
  const auto& events = slot.session->log().events();
  if (slot.persisted == events.size()) return;
  std::string lines;
  for (std::size_t i = slot.persisted; i < events.size(); ++i) {
    lines += deliberation::to_jsonl_line(events[i]);
    lines += '\n';
  }
  const auto path = slot.dir / "events.jsonl";
  try {
    write_all(slot.fd, lines, path);
    if (::fsync(slot.fd) != 0) io_failure("fsync", path);
  } catch (...) {
    // Memory is now ahead of disk; refuse further writes to this session.
    slot.failed = true;
    throw;
  }
  slot.persisted = events.size();
  if (options_.snapshot_every > 0 && slot.persisted - slot.snapshot_at >= options_.snapshot_every) {
    write_snapshot(slot);
  }
}

void SessionStore::write_snapshot(Slot& slot) {
  try {
    write_file_atomic(slot.dir / "snapshot.json", slot.session->snapshot().dump());
    slot.snapshot_at = slot.persisted;
  } catch (const std::exception& e) {
    // The log is authoritative; a missing snapshot only slows recovery.
    std::cerr << "gci: snapshot failed for " << slot.session->id() << ": " << e.what() << "\n";
  }
}

std::vector<std::string> SessionStore::session_ids() const {
  std::shared_lock lock(slots_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : slots_) ids.push_back(id);
  return ids;
}

std::map<std::string, std::string> SessionStore::quarantined() const {
  std::shared_lock lock(slots_mutex_);
  return quarantined_;
}

}  // namespace gci::service
