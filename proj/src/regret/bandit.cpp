#include "gci/regret/bandit.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "gci/common/error.hpp"

namespace gci::regret {

BanditState make_bandit(std::size_t arms, Policy policy, double prior_alpha,
                        double prior_beta) {
  if (arms == 0) throw Error(ErrorCode::invalid_argument, "bandit needs at least one arm");
  if (!(prior_alpha > 0) || !(prior_beta > 0)) {
    throw Error(ErrorCode::invalid_argument, "beta prior parameters must be positive");
  }
  BanditState state;
  state.arms.assign(arms, ArmBelief{prior_alpha, prior_beta, 0, 0.0, 0.0});
  state.policy = policy;
  state.prior_alpha = prior_alpha;
  state.prior_beta = prior_beta;
  return state;
}

std::vector<double> arm_indices(const BanditState& state, std::uint64_t seed) {
  std::vector<double> values(state.arm_count());
  if (state.policy == Policy::thompson) {
    std::mt19937_64 rng(seed);
    for (std::size_t a = 0; a < values.size(); ++a) {
      const auto& arm = state.arms[a];
      std::gamma_distribution<double> x(arm.alpha, 1.0);
      std::gamma_distribution<double> y(arm.beta, 1.0);
      const double gx = x(rng);
      const double gy = y(rng);
      values[a] = gx + gy > 0 ? gx / (gx + gy) : 0.5;
    }
    return values;
  }
  // UCB1 on the posterior mean with evidence counted from alpha + beta.
  double total = 0.0;
  for (const auto& arm : state.arms) total += arm.alpha + arm.beta - state.prior_alpha - state.prior_beta;
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto& arm = state.arms[a];
    const double n = arm.alpha + arm.beta - state.prior_alpha - state.prior_beta;
    values[a] = n <= 0 ? std::numeric_limits<double>::infinity()
                       : arm.posterior_mean() + std::sqrt(2.0 * std::log(total + 1.0) / n);
  }
  return values;
}

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t select_arm(const BanditState& state, std::uint64_t seed) {
  if (state.arms.empty()) throw Error(ErrorCode::invalid_argument, "bandit has no arms");
  if (state.arm_count() == 1) return 0;
  return argmax_first(arm_indices(state, seed));
}

BanditState update_own(BanditState state, std::size_t arm, int reward) {
  if (arm >= state.arm_count()) {
    throw Error(ErrorCode::invalid_argument, "invalid arm " + std::to_string(arm));
  }
  if (reward != 0 && reward != 1) {
    throw Error(ErrorCode::invalid_argument, "reward must be 0 or 1");
  }
  auto& belief = state.arms[arm];
  belief.alpha += reward;
  belief.beta += 1 - reward;
  belief.pulls += 1;
  belief.reward_sum += reward;
  return state;
}

}  // namespace gci::regret
