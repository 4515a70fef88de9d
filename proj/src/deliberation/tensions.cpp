#include "gci/deliberation/tensions.hpp"

#include <algorithm>
#include <cmath>

#include "gci/common/error.hpp"

namespace gci::deliberation {

double disagreement(std::uint64_t wins, std::uint64_t total) {
  if (total == 0) throw Error(ErrorCode::invalid_argument, "disagreement of an unjudged pair");
  if (wins > total) throw Error(ErrorCode::invalid_argument, "wins exceed total");
  const double share = static_cast<double>(wins) / static_cast<double>(total);
  return 1.0 - std::abs(2.0 * share - 1.0);
}

std::vector<Tension> surface_tensions(const judgment::ComparisonTally& tally, double threshold,
                                      std::uint64_t min_comparisons) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "tension threshold must lie in [0, 1]");
  }
  std::vector<Tension> out;
  for (const auto& [a, b] : tally.observed_pairs()) {
    const auto n = tally.total(a, b);
    if (n < min_comparisons) continue;
    const double d = disagreement(tally.wins(a, b), n);
    if (d >= threshold) out.push_back({a, b, n, d});
  }
  std::stable_sort(out.begin(), out.end(), [](const Tension& x, const Tension& y) {
    return x.disagreement > y.disagreement;
  });
  return out;
}

}  // namespace gci::deliberation
