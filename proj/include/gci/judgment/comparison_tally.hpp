#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace gci::judgment {

using ItemId = std::string;

/// One reviewer's pairwise preference.
struct Judgment {
  ItemId winner;
  ItemId loser;
};

/// Ordered-pair win counts. wins(i, j) is how many reviewers preferred i
/// over j; self-pairs are rejected on entry.
class ComparisonTally {
 public:
  using PairKey = std::pair<ItemId, ItemId>;

  ComparisonTally() = default;

  static ComparisonTally from_judgments(const std::vector<Judgment>& judgments);

  void record(const ItemId& winner, const ItemId& loser, std::uint64_t count = 1);
  void record(const Judgment& j) { record(j.winner, j.loser); }

  std::uint64_t wins(const ItemId& i, const ItemId& j) const;
  std::uint64_t total(const ItemId& i, const ItemId& j) const {
    return wins(i, j) + wins(j, i);
  }
  std::uint64_t total_judgments() const { return total_; }

  bool empty() const { return total_ == 0; }

  /// Items that appear in at least one recorded comparison, sorted.
  std::vector<ItemId> items() const;

  /// Unordered pairs (first < second) with at least one comparison.
  std::vector<PairKey> observed_pairs() const;

  const std::map<PairKey, std::uint64_t>& entries() const { return wins_; }

  friend bool operator==(const ComparisonTally&, const ComparisonTally&) = default;

 private:
  std::map<PairKey, std::uint64_t> wins_;
  std::uint64_t total_ = 0;
};

}  // namespace gci::judgment
