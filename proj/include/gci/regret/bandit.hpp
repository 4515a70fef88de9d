#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gci::regret {

using AgentId = std::uint32_t;

enum class Policy { thompson, ucb };

/// Beta belief over one Bernoulli arm plus bookkeeping for own pulls and
/// trust-weighted social evidence.
struct ArmBelief {
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;
  /// Total trust weight of neighbor observations folded into alpha/beta.
  double social_mass = 0.0;

  double posterior_mean() const { return alpha / (alpha + beta); }
  double empirical_mean() const {
    return pulls == 0 ? 0.0 : reward_sum / static_cast<double>(pulls);
  }
};

struct BanditState {
  std::vector<ArmBelief> arms;
  Policy policy = Policy::thompson;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  /// Neighbor observations received from agents without a trust entry.
  std::uint64_t untrusted_observations = 0;

  std::size_t arm_count() const { return arms.size(); }
};

BanditState make_bandit(std::size_t arms, Policy policy = Policy::thompson,
                        double prior_alpha = 1.0, double prior_beta = 1.0);

/// Per-arm index values the policy maximizes: one Beta draw per arm for
/// Thompson sampling, the upper confidence bound for UCB.
std::vector<double> arm_indices(const BanditState& state, std::uint64_t seed);

/// First index of the maximum value.
std::size_t argmax_first(std::span<const double> values);

/// Minimum-regret choice: argmax of `arm_indices`, lowest index on ties.
std::size_t select_arm(const BanditState& state, std::uint64_t seed);

/// Conjugate Bernoulli update for the agent's own pull; reward is 0 or 1.
BanditState update_own(BanditState state, std::size_t arm, int reward);

}  // namespace gci::regret
