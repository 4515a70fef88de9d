#include "gci/regret/cooperation.hpp"

#include <algorithm>
#include <cmath>

#include "gci/common/error.hpp"

namespace gci::regret {

void TrustWeights::set(AgentId agent, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "trust weight must lie in [0, 1]");
  }
  if (agent == self_) {
    if (weight != 1.0) throw Error(ErrorCode::invalid_argument, "self trust is fixed at 1");
    return;
  }
  weights_[agent] = weight;
}

double TrustWeights::weight(AgentId agent) const {
  if (agent == self_) return 1.0;
  auto it = weights_.find(agent);
  return it == weights_.end() ? 0.0 : it->second;
}

bool TrustWeights::has_entry(AgentId agent) const {
  return agent == self_ || weights_.contains(agent);
}

BanditState update_social(BanditState state, std::span<const NeighborObservation> observations,
                          const TrustWeights& trust) {
  for (const auto& obs : observations) {
    if (obs.arm >= state.arm_count()) {
      throw Error(ErrorCode::invalid_argument, "observation references invalid arm");
    }
    if (!(obs.reward >= 0.0 && obs.reward <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "observed reward must lie in [0, 1]");
    }
  }
  for (const auto& obs : observations) {
    if (!trust.has_entry(obs.agent)) {
      ++state.untrusted_observations;
      continue;
    }
    const double w = trust.weight(obs.agent);
    if (w == 0.0) continue;
    auto& arm = state.arms[obs.arm];
    arm.alpha += w * obs.reward;
    arm.beta += w * (1.0 - obs.reward);
    arm.social_mass += w;
  }
  return state;
}

double choice_agreement(std::span<const std::size_t> mine, std::span<const std::size_t> theirs) {
  if (mine.size() != theirs.size()) {
    throw Error(ErrorCode::invalid_argument, "choice histories differ in length");
  }
  if (mine.empty()) throw Error(ErrorCode::invalid_argument, "choice history is empty");
  std::size_t same = 0;
  for (std::size_t t = 0; t < mine.size(); ++t) same += mine[t] == theirs[t] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(mine.size());
}

TrustWeights trust_from_agreement(AgentId self, const std::map<AgentId, double>& agreement,
                                  std::size_t k) {
  if (k > agreement.size()) {
    throw Error(ErrorCode::invalid_argument, "trust subset larger than the number of agents");
  }
  std::vector<std::pair<AgentId, double>> ranked(agreement.begin(), agreement.end());
  // Map order already sorts by id, so a stable sort keeps id order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  TrustWeights trust(self);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (ranked[r].first == self) continue;
    trust.set(ranked[r].first, r < k ? 1.0 : 0.0);
  }
  return trust;
}

TrustWeights select_trust_subset(AgentId self, std::span<const std::size_t> mine,
                                 const std::map<AgentId, std::vector<std::size_t>>& others,
                                 std::size_t k) {
  std::map<AgentId, double> agreement;
  for (const auto& [agent, history] : others) {
    if (agent == self) continue;
    agreement[agent] = choice_agreement(mine, history);
  }
  return trust_from_agreement(self, agreement, k);
}

std::map<AgentId, double> resolve_collisions(const std::map<AgentId, std::size_t>& choices,
                                             const std::map<std::size_t, double>& payoffs) {
  std::map<std::size_t, std::size_t> crowd;
  for (const auto& [agent, arm] : choices) {
    if (!payoffs.contains(arm)) {
      throw Error(ErrorCode::invalid_argument, "no payoff for chosen arm " + std::to_string(arm));
    }
    ++crowd[arm];
  }
  std::map<AgentId, double> out;
  for (const auto& [agent, arm] : choices) {
    out[agent] = payoffs.at(arm) / static_cast<double>(crowd[arm]);
  }
  return out;
}

}  // namespace gci::regret
