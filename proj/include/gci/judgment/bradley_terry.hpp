#pragma once

#include <cstddef>
#include <functional>

#include "gci/judgment/comparison_tally.hpp"
#include "gci/judgment/score_vector.hpp"

namespace gci::judgment {

struct FitOptions {
  /// Symmetric pseudo-wins added to both directions of every observed pair.
  double epsilon = 0.1;
  /// Stop once the largest per-item relative change drops below this.
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

struct FitResult {
  ScoreVector scores;
  /// Regularized log-likelihood at `scores` (the maximized objective).
  double log_likelihood = 0.0;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Called after every minorize-maximize sweep with the sweep number and the
/// regularized log-likelihood of the current iterate.
using FitObserver = std::function<void(std::size_t iteration, double log_likelihood)>;

/// Regularized Bradley-Terry maximum likelihood via Zermelo's
/// minorize-maximize iteration.
///
/// Maximizes sum over ordered pairs of (wins(i,j) + eps) * log(v_i / (v_i + v_j)),
/// where eps is only added to pairs that have at least one comparison.
/// Throws `no_comparisons` on an empty tally. With eps == 0 the win graph must
/// be strongly connected, otherwise the maximum is not attained at finite
/// strengths and `invalid_argument` is thrown.
FitResult fit_scores(const ComparisonTally& tally, const FitOptions& options = {},
                     const FitObserver& observer = {});

/// Regularized log-likelihood of `scores` under `tally`.
double log_likelihood(const ComparisonTally& tally, const ScoreVector& scores,
                      double epsilon);

}  // namespace gci::judgment
