#include "gci/deliberation/decision_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gci/common/error.hpp"

namespace gci::deliberation {

namespace {

void check_candidates(const std::vector<ItemId>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "no candidates");
  std::set<ItemId> seen(candidates.begin(), candidates.end());
  if (seen.size() != candidates.size()) {
    throw Error(ErrorCode::invalid_argument, "duplicate candidate");
  }
}

void check_weights(const std::vector<double>& weights) {
  if (weights.empty()) throw Error(ErrorCode::invalid_argument, "no criteria");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::invalid_argument, "criterion weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance) {
    throw Error(ErrorCode::invalid_argument, "criterion weights must sum to 1");
  }
}

}  // namespace

double DecisionMatrix::success(const ItemId& candidate) const {
  auto it = std::find(candidates.begin(), candidates.end(), candidate);
  if (it == candidates.end()) throw Error(ErrorCode::unknown_item, "unknown candidate: " + candidate);
  return aggregate[static_cast<std::size_t>(it - candidates.begin())];
}

DecisionMatrix aggregate_decision(std::vector<ItemId> candidates,
                                  std::vector<std::string> criteria, std::vector<double> weights,
                                  std::vector<judgment::ScoreVector> per_criterion) {
  check_candidates(candidates);
  check_weights(weights);
  if (criteria.size() != weights.size() || per_criterion.size() != weights.size()) {
    throw Error(ErrorCode::invalid_argument, "criteria, weights and scores differ in length");
  }
  const std::set<ItemId> expected(candidates.begin(), candidates.end());
  for (std::size_t c = 0; c < per_criterion.size(); ++c) {
    const auto& items = per_criterion[c].items();
    if (std::set<ItemId>(items.begin(), items.end()) != expected) {
      throw Error(ErrorCode::invalid_argument,
                  "criterion '" + criteria[c] + "' covers a different candidate set");
    }
  }

  std::vector<double> agg(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t c = 0; c < per_criterion.size(); ++c) {
      agg[i] += weights[c] * per_criterion[c].strength(candidates[i]);
    }
  }
  double total = 0.0;
  for (double a : agg) total += a;
  for (double& a : agg) a /= total;

  return {std::move(candidates), std::move(criteria), std::move(weights),
          std::move(per_criterion), std::move(agg)};
}

DecisionMatrix evaluate_decision_matrix(std::vector<ItemId> candidates,
                                        const std::vector<Criterion>& criteria,
                                        const judgment::FitOptions& options) {
  check_candidates(candidates);
  const std::set<ItemId> expected(candidates.begin(), candidates.end());
  std::vector<std::string> names;
  std::vector<double> weights;
  std::vector<judgment::ScoreVector> scores;
  for (const auto& c : criteria) {
    names.push_back(c.name);
    weights.push_back(c.weight);
    const auto items = c.tally.items();
    if (candidates.size() == 1 && c.tally.empty()) {
      scores.emplace_back(candidates, std::vector<double>{1.0});
      continue;
    }
    if (std::set<ItemId>(items.begin(), items.end()) != expected) {
      throw Error(ErrorCode::invalid_argument,
                  "criterion '" + c.name + "' covers a different candidate set");
    }
    scores.push_back(judgment::fit_scores(c.tally, options).scores);
  }
  return aggregate_decision(std::move(candidates), std::move(names), std::move(weights),
                            std::move(scores));
}

}  // namespace gci::deliberation
