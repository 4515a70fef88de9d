#include "gci/judgment/comparison_tally.hpp"

#include <set>

#include "gci/common/error.hpp"

namespace gci::judgment {

ComparisonTally ComparisonTally::from_judgments(const std::vector<Judgment>& judgments) {
  ComparisonTally tally;
  for (const auto& j : judgments) tally.record(j);
  return tally;
}

void ComparisonTally::record(const ItemId& winner, const ItemId& loser,
                             std::uint64_t count) {
  if (winner == loser) {
    throw Error(ErrorCode::degenerate_pair, "degenerate pair: " + winner + " vs itself");
  }
  if (count == 0) return;
  wins_[{winner, loser}] += count;
  total_ += count;
}

std::uint64_t ComparisonTally::wins(const ItemId& i, const ItemId& j) const {
  auto it = wins_.find({i, j});
  return it == wins_.end() ? 0 : it->second;
}

std::vector<ItemId> ComparisonTally::items() const {
  std::set<ItemId> seen;
  for (const auto& [key, count] : wins_) {
    seen.insert(key.first);
    seen.insert(key.second);
  }
  return {seen.begin(), seen.end()};
}

std::vector<ComparisonTally::PairKey> ComparisonTally::observed_pairs() const {
  std::set<PairKey> pairs;
  for (const auto& [key, count] : wins_) {
    const auto& [a, b] = key;
    pairs.insert(a < b ? PairKey{a, b} : PairKey{b, a});
  }
  return {pairs.begin(), pairs.end()};
}

}  // namespace gci::judgment
