#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gci/judgment/comparison_tally.hpp"
#include "gci/judgment/score_vector.hpp"

namespace gci::judgment {

inline constexpr std::size_t kDefaultParticles = 1000;

/// Weighted particle approximation of a distribution over score vectors.
///
/// Each particle is a point on the item simplex; weights are nonnegative and
/// sum to 1. Instances are immutable values: every update below takes a
/// posterior by value and returns the successor.
class ScorePosterior {
 public:
  ScorePosterior() = default;

  /// A posterior over zero items, ready for `extend`. Not a valid input to
  /// any other operation.
  static ScorePosterior empty(std::size_t particles, std::uint64_t seed);

  /// Builds a posterior from explicit particles (rows sum-normalized) and
  /// weights (normalized). Mainly for tests and analysis.
  static ScorePosterior from_particles(std::vector<ItemId> items,
                                       const std::vector<std::vector<double>>& particles,
                                       std::vector<double> weights,
                                       std::uint64_t seed = 0);

  /// Rebuilds a posterior from its serialized fields without renormalizing.
  static ScorePosterior restore(std::vector<ItemId> items, std::vector<double> flat,
                                std::vector<double> weights, std::uint64_t epoch,
                                std::uint64_t resamples, std::uint64_t stream);

  const std::vector<ItemId>& items() const { return items_; }
  std::size_t item_count() const { return items_.size(); }
  std::size_t particle_count() const { return weights_.size(); }
  bool contains(const ItemId& item) const;
  std::size_t index_of(const ItemId& item) const;

  std::span<const double> particle(std::size_t p) const {
    return {values_.data() + p * items_.size(), items_.size()};
  }
  std::span<const double> flat() const { return values_; }
  std::span<const double> weights() const { return weights_; }

  /// Number of measurement/drift updates applied.
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t resample_count() const { return resamples_; }
  std::uint64_t stream_state() const { return stream_; }

  double effective_sample_size() const;
  std::vector<double> mean_vector() const;
  ScoreVector mean() const;
  double mean(const ItemId& item) const;
  double variance(const ItemId& item) const;

  /// Index of the particle selected by inverse-CDF lookup of `u` in [0, 1).
  std::size_t draw_particle(double u) const;

  friend ScorePosterior observe(ScorePosterior posterior, const Judgment& judgment);
  friend ScorePosterior drift(ScorePosterior posterior, double sigma, std::uint64_t seed);
  friend ScorePosterior extend(ScorePosterior posterior, const ItemId& item,
                               std::uint64_t seed);
  friend ScorePosterior rejuvenate(ScorePosterior posterior, const ComparisonTally& tally,
                                   std::size_t steps, std::uint64_t seed);

 private:
  void systematic_resample();

  std::vector<ItemId> items_;
  std::vector<double> values_;  // particle-major, particle_count x item_count
  std::vector<double> weights_;
  std::uint64_t epoch_ = 0;
  std::uint64_t resamples_ = 0;
  std::uint64_t stream_ = 0;
};

/// Particles drawn from the symmetric Dirichlet(1) prior, equal weights.
ScorePosterior init_posterior(const std::vector<ItemId>& items,
                              std::size_t particles = kDefaultParticles,
                              std::uint64_t seed = 0);

/// Measurement update: reweights by v_winner / (v_winner + v_loser), then
/// resamples systematically when the effective sample size falls below half
/// the particle count.
ScorePosterior observe(ScorePosterior posterior, const Judgment& judgment);

/// Random-walk transition on log-strengths with standard deviation `sigma`,
/// followed by renormalization. sigma == 0 returns the input unchanged.
ScorePosterior drift(ScorePosterior posterior, double sigma, std::uint64_t seed);

/// Adds `item` to every particle by stick-breaking: the new item takes a
/// Beta(1, n) share and existing strengths are scaled by the remainder, so
/// within-particle ratios are preserved exactly.
ScorePosterior extend(ScorePosterior posterior, const ItemId& item, std::uint64_t seed);

/// Metropolis-Hastings move step targeting Dirichlet(1) x Bradley-Terry
/// likelihood of `tally`. Leaves the static posterior invariant while
/// restoring particle diversity after resampling.
ScorePosterior rejuvenate(ScorePosterior posterior, const ComparisonTally& tally,
                          std::size_t steps, std::uint64_t seed);

/// Weighted fraction of particles in which each item ranks within the top k.
/// Ties inside a particle go to the earlier item.
std::map<ItemId, double> rank_confidence(const ScorePosterior& posterior, std::size_t k);

}  // namespace gci::judgment
