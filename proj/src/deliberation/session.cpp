#include "gci/deliberation/session.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gci/common/error.hpp"
#include "gci/common/seeding.hpp"
#include "gci/common/sha256.hpp"

namespace gci::deliberation {

using nlohmann::json;

namespace {

// Stream ids for seeds derived from the session seed.
constexpr std::uint64_t kPosteriorStream = 11;
constexpr std::uint64_t kExtendStream = 12;
constexpr std::uint64_t kDriftStream = 13;
constexpr std::uint64_t kRejuvenateStream = 14;

constexpr std::size_t kMaxParticles = 100000;

template <typename E, std::size_t N>
E parse_enum(const std::pair<E, std::string_view> (&table)[N], std::string_view text,
             const char* what) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  throw Error(ErrorCode::malformed, std::string("unknown ") + what + ": " + std::string(text));
}

template <typename E, std::size_t N>
std::string_view enum_name(const std::pair<E, std::string_view> (&table)[N], E value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

constexpr std::pair<Phase, std::string_view> kPhases[] = {
    {Phase::collecting, "collecting"},
    {Phase::reviewing, "reviewing"},
    {Phase::converged, "converged"},
    {Phase::revealed, "revealed"},
};
constexpr std::pair<Role, std::string_view> kRoles[] = {
    {Role::contributor, "contributor"},
    {Role::facilitator, "facilitator"},
};
constexpr std::pair<PairPolicy, std::string_view> kPolicies[] = {
    {PairPolicy::adaptive, "adaptive"},
    {PairPolicy::round_robin, "roundrobin"},
};
constexpr std::pair<TaskSignal, std::string_view> kSignals[] = {
    {TaskSignal::no_eligible_pairs, "no_eligible_pairs"},
    {TaskSignal::awaiting_convergence, "awaiting_convergence"},
    {TaskSignal::not_started, "not_started"},
    {TaskSignal::closed, "closed"},
};

std::pair<ItemId, ItemId> unordered(const ItemId& a, const ItemId& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

double unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

json tally_to_json(const judgment::ComparisonTally& tally) {
  json rows = json::array();
  for (const auto& [key, count] : tally.entries()) {
    if (count > 0) rows.push_back(json::array({key.first, key.second, count}));
  }
  return rows;
}

judgment::ComparisonTally tally_from_json(const json& rows) {
  judgment::ComparisonTally tally;
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != 3) throw Error(ErrorCode::malformed, "tally row");
    tally.record(r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<std::uint64_t>());
  }
  return tally;
}

DecisionMatrix decision_from_payload(const json& p) {
  std::vector<ItemId> candidates = p.at("candidates").get<std::vector<ItemId>>();
  std::vector<Criterion> criteria;
  for (const auto& c : p.at("criteria")) {
    criteria.push_back({c.at("name").get<std::string>(), c.at("weight").get<double>(),
                        tally_from_json(c.at("wins"))});
  }
  judgment::FitOptions options;
  options.epsilon = p.at("epsilon").get<double>();
  return evaluate_decision_matrix(std::move(candidates), criteria, options);
}

json participant_json(const Participant& p) {
  return {{"participant_id", p.id},
          {"alias", p.alias},
          {"role", std::string(to_string(p.role))},
          {"credential_digest", p.credential_digest},
          {"token_digest", p.token_digest}};
}

Participant participant_from_json(const json& j) {
  return {j.at("participant_id").get<std::string>(), j.at("alias").get<std::string>(),
          parse_role(j.at("role").get<std::string>()),
          j.at("credential_digest").get<std::string>(), j.at("token_digest").get<std::string>()};
}

}  // namespace

std::string_view to_string(Phase phase) { return enum_name(kPhases, phase); }
std::string_view to_string(Role role) { return enum_name(kRoles, role); }
std::string_view to_string(PairPolicy policy) { return enum_name(kPolicies, policy); }
std::string_view to_string(TaskSignal signal) { return enum_name(kSignals, signal); }
Phase parse_phase(std::string_view text) { return parse_enum(kPhases, text, "phase"); }
Role parse_role(std::string_view text) { return parse_enum(kRoles, text, "role"); }
PairPolicy parse_pair_policy(std::string_view text) {
  return parse_enum(kPolicies, text, "policy");
}

json to_json(const SessionConfig& c) {
  return {{"budget", c.budget},
          {"min_judgments", c.min_judgments},
          {"convergence_threshold", c.convergence_threshold},
          {"convergence_window", c.convergence_window},
          {"drift_sigma", c.drift_sigma},
          {"top_k", c.top_k},
          {"particles", c.particles},
          {"seed", c.seed},
          {"policy", std::string(to_string(c.policy))},
          {"epsilon", c.epsilon},
          {"rejuvenation_steps", c.rejuvenation_steps}};
}

SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::malformed, "session config must be an object");
  static const std::set<std::string> known = {
      "budget",      "min_judgments", "convergence_threshold", "convergence_window",
      "drift_sigma", "top_k",         "particles",             "seed",
      "policy",      "epsilon",       "rejuvenation_steps"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::malformed, "unknown config key: " + key);
  }
  SessionConfig c;
  auto natural = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw Error(ErrorCode::malformed, std::string(key) + " must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  };
  auto count = [&](const char* key, std::size_t& out, std::size_t lo, std::size_t hi) {
    if (!j.contains(key)) return;
    out = natural(key);
    if (out < lo || out > hi) {
      throw Error(ErrorCode::malformed, std::string(key) + " is out of range");
    }
  };
  auto real = [&](const char* key, double& out, double lo, double hi) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw Error(ErrorCode::malformed, std::string(key) + " must be a number");
    out = j.at(key).get<double>();
    if (!(out >= lo && out <= hi)) {
      throw Error(ErrorCode::malformed, std::string(key) + " is out of range");
    }
  };
  constexpr std::size_t big = std::size_t{1} << 40;
  count("budget", c.budget, 1, big);
  count("min_judgments", c.min_judgments, 0, big);
  count("convergence_window", c.convergence_window, 1, big);
  count("top_k", c.top_k, 1, big);
  count("particles", c.particles, 1, kMaxParticles);
  count("rejuvenation_steps", c.rejuvenation_steps, 0, 1000);
  real("convergence_threshold", c.convergence_threshold, 0.0, 1.0);
  real("drift_sigma", c.drift_sigma, 0.0, 10.0);
  real("epsilon", c.epsilon, 0.0, 1e6);
  if (j.contains("seed")) c.seed = natural("seed");
  if (j.contains("policy")) {
    if (!j.at("policy").is_string()) throw Error(ErrorCode::malformed, "policy must be a string");
    c.policy = parse_pair_policy(j.at("policy").get<std::string>());
  }
  return c;
}

CollectiveVoice voice_from(const judgment::ScorePosterior& posterior, std::size_t k) {
  CollectiveVoice voice;
  if (posterior.item_count() == 0) return voice;
  voice.k = std::min(k, posterior.item_count());
  const auto top = judgment::rank_confidence(posterior, voice.k);
  const auto means = posterior.mean_vector();
  for (std::size_t i = 0; i < posterior.item_count(); ++i) {
    const auto& item = posterior.items()[i];
    voice.entries.push_back({item, means[i], top.at(item)});
  }
  std::sort(voice.entries.begin(), voice.entries.end(),
            [](const VoiceEntry& a, const VoiceEntry& b) {
              if (a.topk_probability != b.topk_probability) {
                return a.topk_probability > b.topk_probability;
              }
              if (a.mean != b.mean) return a.mean > b.mean;
              return a.item < b.item;
            });
  return voice;
}

std::optional<Task> choose_pair(const judgment::ScorePosterior& posterior,
                                const std::vector<std::pair<ItemId, ItemId>>& eligible,
                                const std::map<std::pair<ItemId, ItemId>, std::uint64_t>& counts,
                                PairPolicy policy, std::uint64_t seed) {
  if (eligible.empty()) return std::nullopt;
  std::uint64_t state = seed;
  const double u1 = unit(state);
  const double u2 = unit(state);
  const bool flip = (splitmix64(state) & 1) != 0;

  auto count_of = [&](const std::pair<ItemId, ItemId>& key) -> std::uint64_t {
    auto it = counts.find(key);
    return it == counts.end() ? 0 : it->second;
  };

  std::vector<double> score(eligible.size(), 0.0);
  if (policy == PairPolicy::adaptive) {
    const auto a = posterior.particle(posterior.draw_particle(u1));
    const auto b = posterior.particle(posterior.draw_particle(u2));
    for (std::size_t e = 0; e < eligible.size(); ++e) {
      const auto i = posterior.index_of(eligible[e].first);
      const auto j = posterior.index_of(eligible[e].second);
      score[e] = std::abs(a[i] / (a[i] + a[j]) - b[i] / (b[i] + b[j]));
    }
  }

  std::size_t best = 0;
  for (std::size_t e = 1; e < eligible.size(); ++e) {
    if (score[e] != score[best]) {
      if (score[e] > score[best]) best = e;
      continue;
    }
    const auto ce = count_of(eligible[e]);
    const auto cb = count_of(eligible[best]);
    if (ce < cb || (ce == cb && eligible[e] < eligible[best])) best = e;
  }
  const auto& [x, y] = eligible[best];
  return flip ? Task{y, x} : Task{x, y};
}

// ---------------------------------------------------------------------------
// Construction and replay

Session Session::create(std::string session_id, SessionConfig config, ParticipantId facilitator,
                        std::string credential_digest, std::string token_digest) {
  if (session_id.empty()) throw Error(ErrorCode::invalid_argument, "empty session id");
  if (facilitator.empty()) throw Error(ErrorCode::invalid_argument, "empty participant id");
  // Round-trip through the parser so programmatic configs obey the same limits.
  config = session_config_from_json(to_json(config));
  Participant f{std::move(facilitator), "facilitator-1", Role::facilitator,
                std::move(credential_digest), std::move(token_digest)};
  Session s;
  s.commit(EventKind::session_created,
           {{"session_id", std::move(session_id)},
            {"config", to_json(config)},
            {"posterior_seed", derive_seed(config.seed, {kPosteriorStream})},
            {"facilitator", participant_json(f)}});
  return s;
}

Session Session::replay(std::span<const SessionEvent> events) {
  if (events.empty() || events.front().kind != EventKind::session_created) {
    throw Error(ErrorCode::missing_session_created, "missing session-created");
  }
  verify_chain(events);
  Session s;
  s.log_ = EventLog(std::vector<SessionEvent>(events.begin(), events.end()));
  for (const auto& e : events) s.apply(e);
  return s;
}

Session Session::restore(const json& snap, std::span<const SessionEvent> events) {
  verify_chain(events);
  Session s;
  try {
    const auto count = snap.at("event_count").get<std::size_t>();
    if (count == 0 || count > events.size() ||
        events[count - 1].hash != snap.at("head_hash").get<std::string>()) {
      throw Error(ErrorCode::broken_chain, "snapshot does not match the event log");
    }
    s.id_ = snap.at("session_id").get<std::string>();
    s.config_ = session_config_from_json(snap.at("config"));
    s.phase_ = parse_phase(snap.at("phase").get<std::string>());
    for (const auto& p : snap.at("participants")) {
      s.participants_.push_back(participant_from_json(p));
      if (s.participants_.back().role == Role::contributor) ++s.contributors_;
    }
    for (const auto& i : snap.at("ideas")) {
      Idea idea{i.at("item").get<std::string>(), i.at("text").get<std::string>(),
                i.at("contributor").get<std::string>(), i.at("seq").get<std::uint64_t>(),
                std::nullopt};
      if (!i.at("parent").is_null()) idea.parent = i.at("parent").get<std::string>();
      s.ideas_.push_back(std::move(idea));
    }
    for (const auto& a : snap.at("assignments")) {
      s.assignments_.push_back({a.at("participant").get<std::string>(),
                                a.at("first").get<std::string>(),
                                a.at("second").get<std::string>(), a.at("seq").get<std::uint64_t>(),
                                a.at("answered").get<bool>()});
      ++s.pair_counts_[unordered(s.assignments_.back().first, s.assignments_.back().second)];
    }
    for (const auto& jd : snap.at("judgments")) {
      s.judgments_.push_back({jd.at("participant").get<std::string>(),
                              jd.at("winner").get<std::string>(),
                              jd.at("loser").get<std::string>(), jd.at("seq").get<std::uint64_t>(),
                              jd.value("key", std::string())});
    }
    for (const auto& flag : snap.at("topk_changed")) s.topk_changed_.push_back(flag.get<bool>());
    s.tally_ = tally_from_json(snap.at("tally"));
    const auto& post = snap.at("posterior");
    s.posterior_ = judgment::ScorePosterior::restore(
        post.at("items").get<std::vector<ItemId>>(), post.at("flat").get<std::vector<double>>(),
        post.at("weights").get<std::vector<double>>(), post.at("epoch").get<std::uint64_t>(),
        post.at("resamples").get<std::uint64_t>(), post.at("stream").get<std::uint64_t>());
    s.decision_input_ = snap.at("decision");
    if (!s.decision_input_.is_null()) s.decision_ = decision_from_payload(s.decision_input_);
    s.log_ = EventLog(std::vector<SessionEvent>(events.begin(), events.end()));
    for (std::size_t i = count; i < events.size(); ++i) s.apply(events[i]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed, std::string("bad snapshot: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Event application (shared by live operations and replay)

void Session::commit(EventKind kind, json payload) { apply(log_.append(kind, std::move(payload))); }

void Session::apply(const SessionEvent& event) {
  const auto& p = event.payload;
  try {
    switch (event.kind) {
      case EventKind::session_created:
        if (event.seq != 0) throw Error(ErrorCode::malformed, "session-created after start");
        apply_created(p);
        break;
      case EventKind::participant_joined: apply_joined(p); break;
      case EventKind::idea_submitted: apply_idea(p, event.seq); break;
      case EventKind::task_assigned: apply_assigned(p, event.seq); break;
      case EventKind::judgment_recorded: apply_judgment(p, event.seq); break;
      case EventKind::phase_changed: apply_phase(p); break;
      case EventKind::criterion_scored: apply_criteria(p); break;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed,
                "bad payload at sequence " + std::to_string(event.seq) + ": " + e.what());
  }
}

void Session::apply_created(const json& p) {
  id_ = p.at("session_id").get<std::string>();
  config_ = session_config_from_json(p.at("config"));
  posterior_ = judgment::ScorePosterior::empty(config_.particles,
                                               p.at("posterior_seed").get<std::uint64_t>());
  participants_.push_back(participant_from_json(p.at("facilitator")));
  phase_ = Phase::collecting;
}

void Session::apply_joined(const json& p) {
  participants_.push_back(participant_from_json(p));
  if (participants_.back().role == Role::contributor) ++contributors_;
}

void Session::apply_idea(const json& p, std::uint64_t seq) {
  Idea idea{p.at("item").get<std::string>(), p.at("text").get<std::string>(),
            p.at("contributor").get<std::string>(), seq, std::nullopt};
  if (!p.at("parent").is_null()) idea.parent = p.at("parent").get<std::string>();
  posterior_ = judgment::extend(std::move(posterior_), idea.id,
                                p.at("extension_seed").get<std::uint64_t>());
  ideas_.push_back(std::move(idea));
}

void Session::apply_assigned(const json& p, std::uint64_t seq) {
  Assignment a{p.at("participant").get<std::string>(), p.at("first").get<std::string>(),
               p.at("second").get<std::string>(), seq, false};
  ++pair_counts_[unordered(a.first, a.second)];
  assignments_.push_back(std::move(a));
}

void Session::apply_judgment(const json& p, std::uint64_t seq) {
  RecordedJudgment j{p.at("participant").get<std::string>(), p.at("winner").get<std::string>(),
                     p.at("loser").get<std::string>(), seq,
                     p.value("idempotency_key", std::string())};
  const auto key = unordered(j.winner, j.loser);
  for (auto& a : assignments_) {
    if (a.participant == j.participant && !a.answered && unordered(a.first, a.second) == key) {
      a.answered = true;
      break;
    }
  }

  auto before = top_set();
  tally_.record(j.winner, j.loser);
  if (config_.drift_sigma > 0.0) {
    posterior_ = judgment::drift(std::move(posterior_), config_.drift_sigma,
                                 p.at("drift_seed").get<std::uint64_t>());
  }
  const auto resamples = posterior_.resample_count();
  posterior_ = judgment::observe(std::move(posterior_), {j.winner, j.loser});
  // Move steps target the static posterior, so they only apply without drift.
  if (config_.drift_sigma == 0.0 && config_.rejuvenation_steps > 0 &&
      posterior_.resample_count() != resamples) {
    posterior_ = judgment::rejuvenate(std::move(posterior_), tally_, config_.rejuvenation_steps,
                                      p.at("rejuvenation_seed").get<std::uint64_t>());
  }
  judgments_.push_back(std::move(j));
  topk_changed_.push_back(before != top_set());

  if (phase_ == Phase::reviewing && judgments_.size() >= config_.min_judgments &&
      convergence_metric(config_.convergence_window) >= config_.convergence_threshold) {
    phase_ = Phase::converged;
  }
}

void Session::apply_phase(const json& p) { phase_ = parse_phase(p.at("to").get<std::string>()); }

void Session::apply_criteria(const json& p) {
  decision_ = decision_from_payload(p);
  decision_input_ = p;
}

// ---------------------------------------------------------------------------
// Live operations

const Participant& Session::require_participant(const ParticipantId& id) const {
  const auto* p = find_participant(id);
  if (!p) throw Error(ErrorCode::unknown_participant, "unknown participant");
  return *p;
}

const Participant& Session::require_facilitator(const ParticipantId& id) const {
  const auto& p = require_participant(id);
  if (p.role != Role::facilitator) throw Error(ErrorCode::forbidden, "facilitator role required");
  return p;
}

const Participant& Session::join(ParticipantId id, Role role, std::string credential_digest,
                                 std::string token_digest) {
  if (!credential_digest.empty()) {
    for (const auto& p : participants_) {
      if (p.credential_digest == credential_digest) return p;
    }
  }
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "empty participant id");
  if (find_participant(id)) throw Error(ErrorCode::invalid_argument, "participant id in use");
  std::size_t same_role = 0;
  for (const auto& p : participants_) same_role += p.role == role ? 1 : 0;
  Participant p{std::move(id), std::string(to_string(role)) + "-" + std::to_string(same_role + 1),
                role, std::move(credential_digest), std::move(token_digest)};
  commit(EventKind::participant_joined, participant_json(p));
  return participants_.back();
}

ItemId Session::submit_idea(const ParticipantId& participant, std::string text,
                            std::optional<ItemId> parent) {
  require_participant(participant);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "idea text is empty");
  }
  if (phase_ != Phase::collecting && phase_ != Phase::reviewing) {
    throw Error(ErrorCode::phase_conflict, "ideas are closed in phase " +
                                               std::string(to_string(phase_)));
  }
  if (parent && !find_idea(*parent)) throw Error(ErrorCode::unknown_item, "unknown parent item");
  ItemId item = "item-" + std::to_string(ideas_.size() + 1);
  commit(EventKind::idea_submitted,
         {{"item", item},
          {"text", std::move(text)},
          {"contributor", participant},
          {"parent", parent ? json(*parent) : json(nullptr)},
          {"extension_seed", derive_seed(config_.seed, {kExtendStream, ideas_.size()})}});
  return item;
}

TaskResult Session::next_task(const ParticipantId& participant, std::uint64_t seed) {
  require_participant(participant);
  if (phase_ == Phase::collecting) return TaskSignal::not_started;
  if (phase_ != Phase::reviewing) return TaskSignal::closed;

  std::size_t outstanding = 0;
  std::set<std::pair<ItemId, ItemId>> seen;
  for (const auto& a : assignments_) {
    if (a.participant == participant) {
      if (!a.answered) return Task{a.first, a.second};
      seen.insert(unordered(a.first, a.second));
    }
    outstanding += a.answered ? 0 : 1;
  }
  if (judgments_.size() + outstanding >= config_.budget) return TaskSignal::awaiting_convergence;

  std::vector<ItemId> own;
  for (const auto& idea : ideas_) {
    if (idea.contributor != participant) own.push_back(idea.id);
  }
  std::sort(own.begin(), own.end());
  std::vector<std::pair<ItemId, ItemId>> eligible;
  for (std::size_t i = 0; i < own.size(); ++i) {
    for (std::size_t j = i + 1; j < own.size(); ++j) {
      std::pair<ItemId, ItemId> key{own[i], own[j]};
      if (!seen.count(key)) eligible.push_back(std::move(key));
    }
  }
  auto task = choose_pair(posterior_, eligible, pair_counts_, config_.policy, seed);
  if (!task) return TaskSignal::no_eligible_pairs;
  commit(EventKind::task_assigned, {{"participant", participant},
                                    {"first", task->first},
                                    {"second", task->second},
                                    {"seed", seed}});
  return *task;
}

CollectiveVoice Session::record_judgment(const ParticipantId& participant, const ItemId& winner,
                                         const ItemId& loser, const std::string& idempotency_key) {
  require_participant(participant);
  if (!idempotency_key.empty()) {
    for (const auto& j : judgments_) {
      if (j.participant != participant || j.idempotency_key != idempotency_key) continue;
      if (j.winner == winner && j.loser == loser) return collective_voice();
      throw Error(ErrorCode::duplicate_judgment, "idempotency key reused for a different choice");
    }
  }
  if (winner == loser) throw Error(ErrorCode::degenerate_pair, "an item cannot beat itself");
  const auto key = unordered(winner, loser);
  const Assignment* match = nullptr;
  for (const auto& a : assignments_) {
    if (a.participant == participant && unordered(a.first, a.second) == key) match = &a;
  }
  if (!match) throw Error(ErrorCode::unassigned_pair, "judgment without assignment");
  if (match->answered) throw Error(ErrorCode::duplicate_judgment, "pair already judged");
  if (phase_ != Phase::reviewing) {
    throw Error(ErrorCode::phase_conflict, "judgments are closed in phase " +
                                               std::string(to_string(phase_)));
  }
  const auto n = judgments_.size();
  json payload = {{"participant", participant},
                  {"winner", winner},
                  {"loser", loser},
                  {"drift_seed", derive_seed(config_.seed, {kDriftStream, n})},
                  {"rejuvenation_seed", derive_seed(config_.seed, {kRejuvenateStream, n})}};
  if (!idempotency_key.empty()) payload["idempotency_key"] = idempotency_key;
  commit(EventKind::judgment_recorded, std::move(payload));
  return collective_voice();
}

void Session::change_phase(const ParticipantId& facilitator, Phase target) {
  require_facilitator(facilitator);
  if (static_cast<int>(target) <= static_cast<int>(phase_)) {
    throw Error(ErrorCode::phase_conflict, "cannot move from " + std::string(to_string(phase_)) +
                                               " to " + std::string(to_string(target)));
  }
  commit(EventKind::phase_changed, {{"from", std::string(to_string(phase_))},
                                    {"to", std::string(to_string(target))},
                                    {"by", facilitator}});
}

const DecisionMatrix& Session::score_decision(const ParticipantId& facilitator,
                                              std::vector<ItemId> candidates,
                                              const std::vector<Criterion>& criteria) {
  require_facilitator(facilitator);
  for (const auto& c : candidates) {
    if (!find_idea(c)) throw Error(ErrorCode::unknown_item, "unknown candidate: " + c);
  }
  json rows = json::array();
  for (const auto& c : criteria) {
    rows.push_back({{"name", c.name}, {"weight", c.weight}, {"wins", tally_to_json(c.tally)}});
  }
  json payload = {{"by", facilitator},
                  {"candidates", candidates},
                  {"criteria", std::move(rows)},
                  {"epsilon", config_.epsilon}};
  decision_from_payload(payload);  // validate before anything is logged
  commit(EventKind::criterion_scored, std::move(payload));
  return *decision_;
}

// ---------------------------------------------------------------------------
// Queries

std::uint64_t Session::pair_assignments(const ItemId& a, const ItemId& b) const {
  auto it = pair_counts_.find(unordered(a, b));
  return it == pair_counts_.end() ? 0 : it->second;
}

const Participant* Session::find_participant(const ParticipantId& id) const {
  for (const auto& p : participants_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const Participant* Session::find_by_token_digest(std::string_view digest) const {
  if (digest.empty()) return nullptr;
  for (const auto& p : participants_) {
    if (p.token_digest == digest) return &p;
  }
  return nullptr;
}

const Idea* Session::find_idea(const ItemId& id) const {
  for (const auto& i : ideas_) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

std::size_t Session::effective_k() const { return std::min(config_.top_k, ideas_.size()); }

std::vector<ItemId> Session::top_set() const {
  auto voice = voice_from(posterior_, config_.top_k);
  std::vector<ItemId> top;
  for (std::size_t i = 0; i < voice.k; ++i) top.push_back(voice.entries[i].item);
  std::sort(top.begin(), top.end());
  return top;
}

CollectiveVoice Session::collective_voice() const {
  auto voice = voice_from(posterior_, config_.top_k);
  voice.convergence = convergence_metric(config_.convergence_window);
  voice.epoch = judgments_.size();
  return voice;
}

double window_stability(const std::vector<bool>& changed, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::invalid_argument, "window must be at least 1");
  if (changed.size() < window) return 0.0;
  std::size_t stable = 0;
  for (std::size_t i = changed.size() - window; i < changed.size(); ++i) {
    stable += changed[i] ? 0 : 1;
  }
  return static_cast<double>(stable) / static_cast<double>(window);
}

double Session::convergence_metric(std::size_t window) const {
  return window_stability(topk_changed_, window);
}

std::vector<Tension> Session::surface_tensions(double threshold) const {
  return deliberation::surface_tensions(tally_, threshold);
}

std::vector<Contribution> Session::contribution_ranking() const {
  if (phase_ != Phase::converged && phase_ != Phase::revealed) {
    throw Error(ErrorCode::not_converged, "ranking available after convergence");
  }
  std::map<ParticipantId, double> relevance;
  for (const auto& p : participants_) {
    if (p.role == Role::contributor) relevance[p.id] = 0.0;
  }
  for (const auto& idea : ideas_) relevance[idea.contributor] += posterior_.mean(idea.id);
  std::vector<Contribution> out;
  for (const auto& [id, score] : relevance) {
    out.push_back({id, require_participant(id).alias, score});
  }
  std::stable_sort(out.begin(), out.end(), [](const Contribution& a, const Contribution& b) {
    return a.relevance > b.relevance;
  });
  return out;
}

json Session::snapshot() const {
  json participants = json::array();
  for (const auto& p : participants_) participants.push_back(participant_json(p));
  json ideas = json::array();
  for (const auto& i : ideas_) {
    ideas.push_back({{"item", i.id},
                     {"text", i.text},
                     {"contributor", i.contributor},
                     {"seq", i.seq},
                     {"parent", i.parent ? json(*i.parent) : json(nullptr)}});
  }
  json assignments = json::array();
  for (const auto& a : assignments_) {
    assignments.push_back({{"participant", a.participant},
                           {"first", a.first},
                           {"second", a.second},
                           {"seq", a.seq},
                           {"answered", a.answered}});
  }
  json judgments = json::array();
  for (const auto& j : judgments_) {
    json row = {{"participant", j.participant}, {"winner", j.winner}, {"loser", j.loser}, {"seq", j.seq}};
    if (!j.idempotency_key.empty()) row["key"] = j.idempotency_key;
    judgments.push_back(std::move(row));
  }
  json flags = json::array();
  for (bool f : topk_changed_) flags.push_back(f);
  const auto flat = posterior_.flat();
  const auto weights = posterior_.weights();
  return {{"session_id", id_},
          {"config", to_json(config_)},
          {"phase", std::string(to_string(phase_))},
          {"participants", std::move(participants)},
          {"ideas", std::move(ideas)},
          {"assignments", std::move(assignments)},
          {"judgments", std::move(judgments)},
          {"topk_changed", std::move(flags)},
          {"tally", tally_to_json(tally_)},
          {"posterior",
           {{"items", posterior_.items()},
            {"flat", std::vector<double>(flat.begin(), flat.end())},
            {"weights", std::vector<double>(weights.begin(), weights.end())},
            {"epoch", posterior_.epoch()},
            {"resamples", posterior_.resample_count()},
            {"stream", posterior_.stream_state()}}},
          {"decision", decision_input_},
          {"event_count", log_.size()},
          {"head_hash", log_.head_hash()}};
}

std::string Session::state_hash() const { return sha256_hex(canonical_json(snapshot())); }

}  // namespace gci::deliberation
