#include "gci/judgment/bradley_terry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gci/common/error.hpp"

namespace gci::judgment {

namespace {

struct PairTerm {
  std::size_t i;
  std::size_t j;
  double wins_ij;  // regularized
  double wins_ji;
};

std::vector<PairTerm> build_terms(const ComparisonTally& tally,
                                  const std::vector<ItemId>& items, double epsilon) {
  std::vector<PairTerm> terms;
  for (const auto& [a, b] : tally.observed_pairs()) {
    auto ia = static_cast<std::size_t>(std::lower_bound(items.begin(), items.end(), a) -
                                       items.begin());
    auto ib = static_cast<std::size_t>(std::lower_bound(items.begin(), items.end(), b) -
                                       items.begin());
    terms.push_back({ia, ib, static_cast<double>(tally.wins(a, b)) + epsilon,
                     static_cast<double>(tally.wins(b, a)) + epsilon});
  }
  return terms;
}

double objective(const std::vector<PairTerm>& terms, const std::vector<double>& v) {
  double ll = 0.0;
  for (const auto& t : terms) {
    const double denom = v[t.i] + v[t.j];
    if (t.wins_ij > 0) ll += t.wins_ij * std::log(v[t.i] / denom);
    if (t.wins_ji > 0) ll += t.wins_ji * std::log(v[t.j] / denom);
  }
  return ll;
}

// Every item must be reachable from every other along "beats" edges.
bool strongly_connected(const std::vector<PairTerm>& terms, std::size_t n) {
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& t : terms) {
        // edge i -> j when i beat j at least once
        auto visit = [&](std::size_t from, std::size_t to, double w) {
          if (w > 0 && from == u && !seen[to]) {
            seen[to] = 1;
            stack.push_back(to);
          }
        };
        if (forward) {
          visit(t.i, t.j, t.wins_ij);
          visit(t.j, t.i, t.wins_ji);
        } else {
          visit(t.j, t.i, t.wins_ij);
          visit(t.i, t.j, t.wins_ji);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach_all(true) && reach_all(false);
}

}  // namespace

FitResult fit_scores(const ComparisonTally& tally, const FitOptions& options,
                     const FitObserver& observer) {
  if (tally.empty()) throw Error(ErrorCode::no_comparisons, "no comparisons");
  if (options.epsilon < 0 || !std::isfinite(options.epsilon)) {
    throw Error(ErrorCode::invalid_argument, "epsilon must be a finite nonnegative number");
  }

  const std::vector<ItemId> items = tally.items();
  const std::size_t n = items.size();
  const auto terms = build_terms(tally, items, options.epsilon);
  if (options.epsilon == 0.0 && !strongly_connected(terms, n)) {
    throw Error(ErrorCode::invalid_argument,
                "no finite maximum-likelihood estimate (win graph not strongly "
                "connected); use epsilon > 0");
  }

  std::vector<double> wins_total(n, 0.0);
  for (const auto& t : terms) {
    wins_total[t.i] += t.wins_ij;
    wins_total[t.j] += t.wins_ji;
  }

  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> denom(n);
  FitResult result;
  result.epsilon = options.epsilon;

  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    std::fill(denom.begin(), denom.end(), 0.0);
    for (const auto& t : terms) {
      const double c = (t.wins_ij + t.wins_ji) / (v[t.i] + v[t.j]);
      denom[t.i] += c;
      denom[t.j] += c;
    }
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = wins_total[i] / denom[i];
    const double sum = std::accumulate(next.begin(), next.end(), 0.0);
    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= sum;
      max_change = std::max(max_change, std::abs(next[i] - v[i]) / v[i]);
    }
    v = std::move(next);
    result.iterations = iter;
    if (observer) observer(iter, objective(terms, v));
    if (max_change < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.log_likelihood = objective(terms, v);
  result.scores = ScoreVector(items, v);
  return result;
}

double log_likelihood(const ComparisonTally& tally, const ScoreVector& scores,
                      double epsilon) {
  double ll = 0.0;
  for (const auto& [a, b] : tally.observed_pairs()) {
    const double va = scores.strength(a);
    const double vb = scores.strength(b);
    const double wab = static_cast<double>(tally.wins(a, b)) + epsilon;
    const double wba = static_cast<double>(tally.wins(b, a)) + epsilon;
    if (wab > 0) ll += wab * std::log(va / (va + vb));
    if (wba > 0) ll += wba * std::log(vb / (va + vb));
  }
  return ll;
}

}  // namespace gci::judgment
