#include "gci/judgment/score_vector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gci/common/error.hpp"

namespace gci::judgment {

ScoreVector::ScoreVector(std::vector<ItemId> items, std::vector<double> strengths)
    : items_(std::move(items)), strengths_(std::move(strengths)) {
  if (items_.size() != strengths_.size()) {
    throw Error(ErrorCode::invalid_argument, "item and strength counts differ");
  }
  if (std::set<ItemId>(items_.begin(), items_.end()).size() != items_.size()) {
    throw Error(ErrorCode::invalid_argument, "duplicate item in score vector");
  }
  double total = 0.0;
  for (double s : strengths_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::invalid_argument, "strengths must be positive and finite");
    }
    total += s;
  }
  for (double& s : strengths_) s /= total;
}

ScoreVector::ScoreVector(const std::map<ItemId, double>& strengths) {
  std::vector<ItemId> items;
  std::vector<double> values;
  for (const auto& [id, v] : strengths) {
    items.push_back(id);
    values.push_back(v);
  }
  *this = ScoreVector(std::move(items), std::move(values));
}

bool ScoreVector::contains(const ItemId& item) const {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

std::size_t ScoreVector::index_of(const ItemId& item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) throw Error(ErrorCode::unknown_item, "unknown item: " + item);
  return static_cast<std::size_t>(it - items_.begin());
}

double ScoreVector::strength(const ItemId& item) const {
  return strengths_[index_of(item)];
}

std::map<ItemId, double> ScoreVector::to_map() const {
  std::map<ItemId, double> out;
  for (std::size_t i = 0; i < items_.size(); ++i) out[items_[i]] = strengths_[i];
  return out;
}

double win_probability(const ScoreVector& scores, const ItemId& i, const ItemId& j) {
  if (i == j) throw Error(ErrorCode::degenerate_pair, "degenerate pair: " + i);
  const double vi = scores.strength(i);
  const double vj = scores.strength(j);
  return vi / (vi + vj);
}

}  // namespace gci::judgment
