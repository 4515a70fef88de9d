#include "gci/service/views.hpp"

#include "gci/common/error.hpp"

namespace gci::service {

using namespace deliberation;
using nlohmann::json;

namespace {

bool numbers_visible(const Session& s, const Viewer& v) {
  return v.role == Role::facilitator || s.phase() == Phase::converged ||
         s.phase() == Phase::revealed;
}

bool authors_visible(const Session& s, const Viewer& v) {
  if (s.phase() == Phase::revealed) return true;
  return v.role == Role::facilitator && s.phase() == Phase::converged;
}

json idea_ref(const Session& s, const ItemId& item, const Viewer& v) {
  json out = {{"item", item}};
  if (const auto* idea = s.find_idea(item)) {
    out["text"] = idea->text;
    out["parent"] = idea->parent ? json(*idea->parent) : json(nullptr);
    if (idea->contributor == v.id) out["own"] = true;
    if (authors_visible(s, v)) {
      const auto* p = s.find_participant(idea->contributor);
      out["contributor"] = {{"participant_id", idea->contributor},
                            {"alias", p ? p->alias : std::string()}};
    }
  }
  return out;
}

}  // namespace

json voice_view(const Session& s, const CollectiveVoice& voice, const Viewer& v) {
  json entries = json::array();
  const bool numbers = numbers_visible(s, v);
  for (std::size_t r = 0; r < voice.entries.size(); ++r) {
    const auto& e = voice.entries[r];
    json row = idea_ref(s, e.item, v);
    row["rank"] = r + 1;
    if (numbers) {
      row["mean"] = e.mean;
      row["topk_probability"] = e.topk_probability;
    }
    entries.push_back(std::move(row));
  }
  json out = {{"phase", std::string(to_string(s.phase()))},
              {"epoch", voice.epoch},
              {"k", voice.k},
              {"entries", std::move(entries)}};
  if (numbers) out["convergence"] = voice.convergence;
  return out;
}

json facilitator_view(const Session& s, const Viewer& v, double tension_threshold) {
  if (v.role != Role::facilitator) throw Error(ErrorCode::forbidden, "facilitator role required");
  json out = voice_view(s, s.collective_voice(), v);
  json tensions = json::array();
  for (const auto& t : s.surface_tensions(tension_threshold)) {
    tensions.push_back({{"first", t.first},
                        {"second", t.second},
                        {"comparisons", t.comparisons},
                        {"disagreement", t.disagreement}});
  }
  out["tensions"] = std::move(tensions);
  out["judgments"] = s.judgments().size();
  out["budget"] = s.config().budget;
  out["convergence_threshold"] = s.config().convergence_threshold;
  return out;
}

json task_view(const Session& s, const Task& task) {
  auto side = [&](const ItemId& item) {
    const auto* idea = s.find_idea(item);
    return json{{"item", item}, {"text", idea ? idea->text : std::string()}};
  };
  return {{"first", side(task.first)}, {"second", side(task.second)}};
}

json session_view(const Session& s, const Viewer& v) {
  const auto* me = s.find_participant(v.id);
  json own = json::array();
  for (const auto& idea : s.ideas()) {
    if (idea.contributor == v.id) own.push_back(idea.id);
  }
  json out = {{"session_id", s.id()},
              {"phase", std::string(to_string(s.phase()))},
              {"you",
               {{"participant_id", v.id},
                {"alias", me ? me->alias : std::string()},
                {"role", std::string(to_string(v.role))}}},
              {"own_ideas", std::move(own)},
              {"ideas", s.ideas().size()},
              {"judgments", s.judgments().size()},
              {"event_count", s.log().size()},
              {"state_hash", s.state_hash()}};
  if (v.role == Role::facilitator) {
    out["config"] = to_json(s.config());
    out["participants"] = s.participants().size();
  }
  return out;
}

json contributions_view(const Session& s, const Viewer& v) {
  if (v.role != Role::facilitator) throw Error(ErrorCode::forbidden, "facilitator role required");
  json rows = json::array();
  std::size_t rank = 0;
  for (const auto& c : s.contribution_ranking()) {
    rows.push_back({{"rank", ++rank},
                    {"participant_id", c.participant},
                    {"alias", c.alias},
                    {"relevance", c.relevance}});
  }
  return {{"phase", std::string(to_string(s.phase()))}, {"contributions", std::move(rows)}};
}

json decision_view(const DecisionMatrix& m) {
  json criteria = json::array();
  for (std::size_t c = 0; c < m.criteria.size(); ++c) {
    json scores = json::object();
    for (const auto& [item, v] : m.per_criterion[c].to_map()) scores[item] = v;
    criteria.push_back({{"name", m.criteria[c]}, {"weight", m.weights[c]}, {"scores", scores}});
  }
  json aggregate = json::array();
  for (std::size_t i = 0; i < m.candidates.size(); ++i) {
    aggregate.push_back({{"item", m.candidates[i]}, {"success_probability", m.aggregate[i]}});
  }
  return {{"criteria", std::move(criteria)}, {"aggregate", std::move(aggregate)}};
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", std::string(code)}, {"message", std::string(message)}};
}

bool leaks_identity(const Session& s, const Viewer& v, std::string_view body) {
  if (v.role == Role::facilitator || s.phase() == Phase::revealed) return false;
  for (const auto& p : s.participants()) {
    if (p.id != v.id && body.find(p.id) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace gci::service
