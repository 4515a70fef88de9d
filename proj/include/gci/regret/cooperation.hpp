#pragma once

#include <map>
#include <span>
#include <vector>

#include "gci/regret/bandit.hpp"

namespace gci::regret {

struct NeighborObservation {
  AgentId agent = 0;
  std::size_t arm = 0;
  double reward = 0.0;  // in [0, 1]
  std::uint64_t epoch = 0;
};

/// Per-agent trust in [0, 1]. The owning agent always trusts itself fully;
/// agents without an entry get weight 0.
class TrustWeights {
 public:
  explicit TrustWeights(AgentId self) : self_(self) {}

  AgentId self() const { return self_; }
  void set(AgentId agent, double weight);
  double weight(AgentId agent) const;
  bool has_entry(AgentId agent) const;
  const std::map<AgentId, double>& entries() const { return weights_; }

 private:
  AgentId self_;
  std::map<AgentId, double> weights_;
};

/// Folds neighbor observations in as fractional pseudo-counts:
/// alpha += w * reward, beta += w * (1 - reward), w = trust weight of the
/// sender. Observations from agents without a trust entry are counted in
/// `untrusted_observations` and otherwise ignored.
BanditState update_social(BanditState state, std::span<const NeighborObservation> observations,
                          const TrustWeights& trust);

/// Fraction of epochs in which two equal-length choice histories agree.
double choice_agreement(std::span<const std::size_t> mine, std::span<const std::size_t> theirs);

/// Binary top-k trust from precomputed agreement fractions; ties go to the
/// lower agent id.
TrustWeights trust_from_agreement(AgentId self, const std::map<AgentId, double>& agreement,
                                  std::size_t k);

/// Trusts the k agents whose choice histories agree most often with `mine`.
TrustWeights select_trust_subset(AgentId self, std::span<const std::size_t> mine,
                                 const std::map<AgentId, std::vector<std::size_t>>& others,
                                 std::size_t k);

/// Each arm's payoff is divided equally among the agents that chose it.
std::map<AgentId, double> resolve_collisions(const std::map<AgentId, std::size_t>& choices,
                                             const std::map<std::size_t, double>& payoffs);

}  // namespace gci::regret
