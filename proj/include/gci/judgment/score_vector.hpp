#pragma once

#include <map>
#include <span>
#include <vector>

#include "gci/judgment/comparison_tally.hpp"

namespace gci::judgment {

/// Positive strengths over a fixed item set, normalized to sum 1.
class ScoreVector {
 public:
  ScoreVector() = default;

  /// Normalizes `strengths`; every value must be positive and finite.
  ScoreVector(std::vector<ItemId> items, std::vector<double> strengths);
  explicit ScoreVector(const std::map<ItemId, double>& strengths);

  std::size_t size() const { return items_.size(); }
  const std::vector<ItemId>& items() const { return items_; }
  std::span<const double> strengths() const { return strengths_; }

  bool contains(const ItemId& item) const;
  double strength(const ItemId& item) const;
  std::size_t index_of(const ItemId& item) const;

  std::map<ItemId, double> to_map() const;

 private:
  std::vector<ItemId> items_;
  std::vector<double> strengths_;
};

/// Bradley-Terry probability that i is preferred over j: v_i / (v_i + v_j).
double win_probability(const ScoreVector& scores, const ItemId& i, const ItemId& j);

}  // namespace gci::judgment
