#pragma once

#include <string>
#include <vector>

#include "gci/judgment/bradley_terry.hpp"
#include "gci/judgment/comparison_tally.hpp"
#include "gci/judgment/score_vector.hpp"

namespace gci::deliberation {

using judgment::ItemId;

struct Criterion {
  std::string name;
  double weight = 0.0;
  judgment::ComparisonTally tally;
};

/// Candidates scored per criterion and combined into success probabilities.
struct DecisionMatrix {
  std::vector<ItemId> candidates;
  std::vector<std::string> criteria;
  std::vector<double> weights;
  std::vector<judgment::ScoreVector> per_criterion;  // parallel to criteria
  std::vector<double> aggregate;                     // parallel to candidates

  double success(const ItemId& candidate) const;
};

inline constexpr double kWeightTolerance = 1e-9;

/// Weighted arithmetic mean of per-criterion strengths, renormalized across
/// candidates. Each score vector must cover exactly the candidate set.
DecisionMatrix aggregate_decision(std::vector<ItemId> candidates,
                                  std::vector<std::string> criteria, std::vector<double> weights,
                                  std::vector<judgment::ScoreVector> per_criterion);

/// Fits every criterion's tally and aggregates. Each tally must mention
/// exactly the candidates (a lone candidate needs an empty tally).
DecisionMatrix evaluate_decision_matrix(std::vector<ItemId> candidates,
                                        const std::vector<Criterion>& criteria,
                                        const judgment::FitOptions& options = {});

}  // namespace gci::deliberation
