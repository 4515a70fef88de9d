#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gci/deliberation/decision_matrix.hpp"
#include "gci/deliberation/event_log.hpp"
#include "gci/deliberation/tensions.hpp"
#include "gci/judgment/comparison_tally.hpp"
#include "gci/judgment/posterior.hpp"

namespace gci::deliberation {

using judgment::ItemId;
using ParticipantId = std::string;

enum class Phase { collecting, reviewing, converged, revealed };
enum class Role { contributor, facilitator };
enum class PairPolicy { adaptive, round_robin };

std::string_view to_string(Phase phase);
std::string_view to_string(Role role);
std::string_view to_string(PairPolicy policy);
Phase parse_phase(std::string_view text);
Role parse_role(std::string_view text);
PairPolicy parse_pair_policy(std::string_view text);

struct SessionConfig {
  std::size_t budget = 100;         // judgments handed out, at most
  std::size_t min_judgments = 20;   // before automatic convergence
  double convergence_threshold = 0.9;
  std::size_t convergence_window = 10;
  double drift_sigma = 0.0;
  std::size_t top_k = 3;
  std::size_t particles = judgment::kDefaultParticles;
  std::uint64_t seed = 0;
  PairPolicy policy = PairPolicy::adaptive;
  double epsilon = 0.1;             // pseudo-wins for per-criterion fits
  std::size_t rejuvenation_steps = 3;
};

nlohmann::json to_json(const SessionConfig& config);
/// Missing keys take defaults; unknown keys and out-of-range values raise
/// ErrorCode::malformed.
SessionConfig session_config_from_json(const nlohmann::json& j);

struct Participant {
  ParticipantId id;
  std::string alias;
  Role role = Role::contributor;
  std::string credential_digest;  // empty when joined without a credential
  std::string token_digest;
};

struct Idea {
  ItemId id;
  std::string text;
  ParticipantId contributor;
  std::uint64_t seq = 0;  // submission event
  std::optional<ItemId> parent;
};

struct Assignment {
  ParticipantId participant;
  ItemId first;   // presentation order
  ItemId second;
  std::uint64_t seq = 0;
  bool answered = false;
};

struct RecordedJudgment {
  ParticipantId participant;
  ItemId winner;
  ItemId loser;
  std::uint64_t seq = 0;
  std::string idempotency_key;  // empty when the client sent none
};

struct Task {
  ItemId first;
  ItemId second;
};

enum class TaskSignal { no_eligible_pairs, awaiting_convergence, not_started, closed };
std::string_view to_string(TaskSignal signal);

using TaskResult = std::variant<Task, TaskSignal>;

struct VoiceEntry {
  ItemId item;
  double mean = 0.0;
  double topk_probability = 0.0;
};

struct CollectiveVoice {
  std::vector<VoiceEntry> entries;
  std::size_t k = 0;
  double convergence = 0.0;
  std::uint64_t epoch = 0;
};

/// Ranked by top-k probability, then posterior mean, then item id.
CollectiveVoice voice_from(const judgment::ScorePosterior& posterior, std::size_t k);

/// Fraction of the last `window` flags that are false (top-k unchanged);
/// 0 while fewer than `window` flags exist.
double window_stability(const std::vector<bool>& changed, std::size_t window);

struct Contribution {
  ParticipantId participant;
  std::string alias;
  double relevance = 0.0;
};

/// Pair-selection rule behind next_task, exposed for analysis.
///
/// `eligible` holds unordered pairs (first < second). Adaptive draws two
/// particles and prefers the pair whose implied win probabilities differ
/// most; ties, and the whole round-robin rule, fall back to fewest prior
/// assignments and then pair order. The returned task is in presentation
/// order, flipped by a coin from the same seed.
std::optional<Task> choose_pair(const judgment::ScorePosterior& posterior,
                                const std::vector<std::pair<ItemId, ItemId>>& eligible,
                                const std::map<std::pair<ItemId, ItemId>, std::uint64_t>& counts,
                                PairPolicy policy, std::uint64_t seed);

/// A single-blind deliberation. Every mutation appends one event and then
/// applies it through the same code path replay uses, so the live state is
/// always the replay of its own log.
class Session {
 public:
  static Session create(std::string session_id, SessionConfig config,
                        ParticipantId facilitator, std::string credential_digest = {},
                        std::string token_digest = {});

  /// Rebuilds a session from a verified log.
  static Session replay(std::span<const SessionEvent> events);

  /// Rebuilds from a snapshot covering a prefix of `events`, then applies
  /// the rest.
  static Session restore(const nlohmann::json& snapshot, std::span<const SessionEvent> events);

  /// Joining twice with the same non-empty credential digest returns the
  /// original participant without a new event.
  const Participant& join(ParticipantId id, Role role = Role::contributor,
                          std::string credential_digest = {}, std::string token_digest = {});

  ItemId submit_idea(const ParticipantId& participant, std::string text,
                     std::optional<ItemId> parent = {});

  /// An unanswered assignment is handed out again unchanged (no event).
  TaskResult next_task(const ParticipantId& participant, std::uint64_t seed);

  // A repeated non-empty key for the same participant and choice is acknowledged
  // without a second event; the same key with a different choice is a duplicate.
  CollectiveVoice record_judgment(const ParticipantId& participant, const ItemId& winner,
                                  const ItemId& loser, const std::string& idempotency_key = {});

  void change_phase(const ParticipantId& facilitator, Phase target);

  const DecisionMatrix& score_decision(const ParticipantId& facilitator,
                                       std::vector<ItemId> candidates,
                                       const std::vector<Criterion>& criteria);

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  const std::vector<Participant>& participants() const { return participants_; }
  const std::vector<Idea>& ideas() const { return ideas_; }
  const std::vector<Assignment>& assignments() const { return assignments_; }
  const std::vector<RecordedJudgment>& judgments() const { return judgments_; }
  const judgment::ComparisonTally& tally() const { return tally_; }
  const judgment::ScorePosterior& posterior() const { return posterior_; }
  const std::optional<DecisionMatrix>& decision() const { return decision_; }
  const EventLog& log() const { return log_; }
  std::uint64_t pair_assignments(const ItemId& a, const ItemId& b) const;

  const Participant* find_participant(const ParticipantId& id) const;
  const Participant* find_by_token_digest(std::string_view digest) const;
  const Idea* find_idea(const ItemId& id) const;

  std::size_t effective_k() const;
  CollectiveVoice collective_voice() const;
  /// Fraction of the last `window` judgments that left the top-k set
  /// unchanged; 0 while fewer judgments exist.
  double convergence_metric(std::size_t window) const;
  std::vector<Tension> surface_tensions(double threshold) const;
  /// Only once converged or revealed.
  std::vector<Contribution> contribution_ranking() const;

  /// Complete serializable state, including the log position it reflects.
  nlohmann::json snapshot() const;
  /// SHA-256 of the canonical snapshot.
  std::string state_hash() const;

 private:
  Session() = default;

  void commit(EventKind kind, nlohmann::json payload);
  void apply(const SessionEvent& event);
  void apply_created(const nlohmann::json& p);
  void apply_joined(const nlohmann::json& p);
  void apply_idea(const nlohmann::json& p, std::uint64_t seq);
  void apply_assigned(const nlohmann::json& p, std::uint64_t seq);
  void apply_judgment(const nlohmann::json& p, std::uint64_t seq);
  void apply_phase(const nlohmann::json& p);
  void apply_criteria(const nlohmann::json& p);

  const Participant& require_participant(const ParticipantId& id) const;
  const Participant& require_facilitator(const ParticipantId& id) const;
  std::vector<ItemId> top_set() const;

  std::string id_;
  SessionConfig config_;
  Phase phase_ = Phase::collecting;
  std::vector<Participant> participants_;
  std::vector<Idea> ideas_;
  std::vector<Assignment> assignments_;
  std::vector<RecordedJudgment> judgments_;
  std::vector<bool> topk_changed_;  // one flag per judgment
  std::map<std::pair<ItemId, ItemId>, std::uint64_t> pair_counts_;
  judgment::ComparisonTally tally_;
  judgment::ScorePosterior posterior_;
  nlohmann::json decision_input_;  // null until a criterion-scored event
  std::optional<DecisionMatrix> decision_;
  std::size_t contributors_ = 0;
  EventLog log_;
};

}  // namespace gci::deliberation
