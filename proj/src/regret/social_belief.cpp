#include "gci/regret/social_belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gci/common/error.hpp"

namespace gci::regret {

SocialBelief make_social_belief(double prior, double likelihood_ratio) {
  if (!(prior > 0.0 && prior < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "prior must lie strictly between 0 and 1");
  }
  if (!(likelihood_ratio > 0.0) || !std::isfinite(likelihood_ratio)) {
    throw Error(ErrorCode::invalid_argument, "likelihood ratio must be positive");
  }
  return {prior, likelihood_ratio, 0, prior};
}

SocialBelief social_update(SocialBelief belief, std::uint64_t observations) {
  belief.observations += observations;
  if (belief.observations == 0) {
    belief.posterior = belief.prior;
    return belief;
  }
  const double log_odds = std::log(belief.prior) - std::log1p(-belief.prior) +
                          static_cast<double>(belief.observations) *
                              std::log(belief.likelihood_ratio);
  double p = 1.0 / (1.0 + std::exp(-log_odds));
  // Keep the posterior strictly inside (0, 1) when the odds saturate.
  p = std::clamp(p, std::numeric_limits<double>::min(),
                 std::nextafter(1.0, 0.0));
  belief.posterior = p;
  return belief;
}

}  // namespace gci::regret
