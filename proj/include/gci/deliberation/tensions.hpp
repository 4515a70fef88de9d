#pragma once

#include <cstdint>
#include <vector>

#include "gci/judgment/comparison_tally.hpp"

namespace gci::deliberation {

using judgment::ItemId;

struct Tension {
  ItemId first;   // first < second
  ItemId second;
  std::uint64_t comparisons = 0;
  double disagreement = 0.0;
};

inline constexpr std::uint64_t kMinTensionComparisons = 4;

/// 1 - |2 w/n - 1|: 1.0 for an even split, 0.0 for a unanimous pair.
double disagreement(std::uint64_t wins, std::uint64_t total);

/// Pairs with at least `min_comparisons` judgments whose disagreement is at
/// least `threshold`, most contested first (ties by pair order).
std::vector<Tension> surface_tensions(const judgment::ComparisonTally& tally, double threshold,
                                      std::uint64_t min_comparisons = kMinTensionComparisons);

}  // namespace gci::deliberation
