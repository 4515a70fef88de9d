#pragma once

#include <cstdint>

namespace gci::regret {

/// Binary belief ("is the new source worth visiting?") updated by repeated
/// observations that each multiply the odds by a fixed likelihood ratio.
struct SocialBelief {
  double prior = 0.5;
  double likelihood_ratio = 1.0;
  std::uint64_t observations = 0;
  double posterior = 0.5;
};

SocialBelief make_social_belief(double prior, double likelihood_ratio);

/// posterior odds = prior odds * LR^(total observations). Always recomputed
/// from the prior, so splitting a batch of observations is exact.
SocialBelief social_update(SocialBelief belief, std::uint64_t observations);

inline bool adopts(const SocialBelief& belief, double threshold = 0.5) {
  return belief.posterior > threshold;
}

}  // namespace gci::regret
