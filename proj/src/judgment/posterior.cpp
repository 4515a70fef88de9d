#include "gci/judgment/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gci/common/error.hpp"
#include "gci/common/seeding.hpp"

namespace gci::judgment {

namespace {

void normalize(std::span<double> values) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  for (double& v : values) v /= total;
}

}  // namespace

ScorePosterior ScorePosterior::empty(std::size_t particles, std::uint64_t seed) {
  if (particles == 0) {
    throw Error(ErrorCode::invalid_argument, "particle count must be at least 1");
  }
  ScorePosterior out;
  out.weights_.assign(particles, 1.0 / static_cast<double>(particles));
  out.stream_ = derive_seed(seed, {0x5eed});
  return out;
}

ScorePosterior ScorePosterior::from_particles(
    std::vector<ItemId> items, const std::vector<std::vector<double>>& particles,
    std::vector<double> weights, std::uint64_t seed) {
  if (items.empty()) throw Error(ErrorCode::invalid_argument, "posterior needs items");
  if (particles.empty() || particles.size() != weights.size()) {
    throw Error(ErrorCode::invalid_argument, "particle and weight counts differ");
  }
  ScorePosterior out = empty(particles.size(), seed);
  out.items_ = std::move(items);
  for (const auto& row : particles) {
    if (row.size() != out.items_.size()) {
      throw Error(ErrorCode::invalid_argument, "particle dimension mismatch");
    }
    for (double v : row) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, "particle strengths must be positive");
      }
    }
    const auto start = out.values_.size();
    out.values_.insert(out.values_.end(), row.begin(), row.end());
    normalize(std::span<double>(out.values_).subspan(start, row.size()));
  }
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw Error(ErrorCode::invalid_argument, "weights must be nonnegative");
    }
  }
  out.weights_ = std::move(weights);
  normalize(out.weights_);
  return out;
}

ScorePosterior ScorePosterior::restore(std::vector<ItemId> items, std::vector<double> flat,
                                       std::vector<double> weights, std::uint64_t epoch,
                                       std::uint64_t resamples, std::uint64_t stream) {
  if (flat.size() != items.size() * weights.size()) {
    throw Error(ErrorCode::malformed, "posterior shape mismatch");
  }
  ScorePosterior out;
  out.items_ = std::move(items);
  out.values_ = std::move(flat);
  out.weights_ = std::move(weights);
  out.epoch_ = epoch;
  out.resamples_ = resamples;
  out.stream_ = stream;
  return out;
}

bool ScorePosterior::contains(const ItemId& item) const {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

std::size_t ScorePosterior::index_of(const ItemId& item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) throw Error(ErrorCode::unknown_item, "unknown item: " + item);
  return static_cast<std::size_t>(it - items_.begin());
}

double ScorePosterior::effective_sample_size() const {
  double sq = 0.0;
  for (double w : weights_) sq += w * w;
  return 1.0 / sq;
}

std::vector<double> ScorePosterior::mean_vector() const {
  const std::size_t n = items_.size();
  std::vector<double> mean(n, 0.0);
  for (std::size_t p = 0; p < weights_.size(); ++p) {
    auto row = particle(p);
    for (std::size_t i = 0; i < n; ++i) mean[i] += weights_[p] * row[i];
  }
  return mean;
}

ScoreVector ScorePosterior::mean() const { return ScoreVector(items_, mean_vector()); }

double ScorePosterior::mean(const ItemId& item) const {
  const std::size_t i = index_of(item);
  double m = 0.0;
  for (std::size_t p = 0; p < weights_.size(); ++p) m += weights_[p] * particle(p)[i];
  return m;
}

double ScorePosterior::variance(const ItemId& item) const {
  const std::size_t i = index_of(item);
  const double m = mean(item);
  double var = 0.0;
  for (std::size_t p = 0; p < weights_.size(); ++p) {
    const double d = particle(p)[i] - m;
    var += weights_[p] * d * d;
  }
  return var;
}

std::size_t ScorePosterior::draw_particle(double u) const {
  double acc = 0.0;
  for (std::size_t p = 0; p < weights_.size(); ++p) {
    acc += weights_[p];
    if (u < acc) return p;
  }
  return weights_.size() - 1;
}

void ScorePosterior::systematic_resample() {
  const std::size_t count = weights_.size();
  const double offset =
      static_cast<double>(splitmix64(stream_) >> 11) * 0x1.0p-53;  // [0, 1)
  std::vector<double> resampled;
  resampled.reserve(values_.size());
  double cumulative = weights_[0];
  std::size_t source = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double target = (static_cast<double>(k) + offset) / static_cast<double>(count);
    while (target >= cumulative && source + 1 < count) cumulative += weights_[++source];
    auto row = particle(source);
    resampled.insert(resampled.end(), row.begin(), row.end());
  }
  values_ = std::move(resampled);
  std::fill(weights_.begin(), weights_.end(), 1.0 / static_cast<double>(count));
  ++resamples_;
}

ScorePosterior init_posterior(const std::vector<ItemId>& items, std::size_t particles,
                              std::uint64_t seed) {
  if (items.empty()) throw Error(ErrorCode::invalid_argument, "posterior needs items");
  if (std::set<ItemId>(items.begin(), items.end()).size() != items.size()) {
    throw Error(ErrorCode::invalid_argument, "duplicate item in posterior");
  }
  ScorePosterior base = ScorePosterior::empty(particles, seed);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<double> flat;
  flat.reserve(items.size() * particles);
  for (std::size_t p = 0; p < particles; ++p) {
    const auto start = flat.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
      flat.push_back(std::max(unit_exp(rng), 1e-300));
    }
    normalize(std::span<double>(flat).subspan(start, items.size()));
  }
  return ScorePosterior::restore(items, std::move(flat), {base.weights().begin(), base.weights().end()},
                                 0, 0, base.stream_state());
}

ScorePosterior observe(ScorePosterior posterior, const Judgment& judgment) {
  if (judgment.winner == judgment.loser) {
    throw Error(ErrorCode::degenerate_pair, "degenerate pair: " + judgment.winner);
  }
  const std::size_t w = posterior.index_of(judgment.winner);
  const std::size_t l = posterior.index_of(judgment.loser);
  const std::size_t n = posterior.item_count();
  double total = 0.0;
  for (std::size_t p = 0; p < posterior.weights_.size(); ++p) {
    const double vw = posterior.values_[p * n + w];
    const double vl = posterior.values_[p * n + l];
    posterior.weights_[p] *= vw / (vw + vl);
    total += posterior.weights_[p];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "posterior weights underflowed");
  }
  for (double& weight : posterior.weights_) weight /= total;
  ++posterior.epoch_;
  if (posterior.effective_sample_size() < 0.5 * static_cast<double>(posterior.particle_count())) {
    posterior.systematic_resample();
  }
  return posterior;
}

ScorePosterior drift(ScorePosterior posterior, double sigma, std::uint64_t seed) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw Error(ErrorCode::invalid_argument, "drift sigma must be nonnegative");
  }
  if (sigma == 0.0) return posterior;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t n = posterior.item_count();
  for (std::size_t p = 0; p < posterior.particle_count(); ++p) {
    std::span<double> row(posterior.values_.data() + p * n, n);
    for (double& v : row) v = std::max(v * std::exp(noise(rng)), 1e-300);
    normalize(row);
  }
  ++posterior.epoch_;
  return posterior;
}

ScorePosterior extend(ScorePosterior posterior, const ItemId& item, std::uint64_t seed) {
  if (posterior.contains(item)) {
    throw Error(ErrorCode::invalid_argument, "item already in posterior: " + item);
  }
  const std::size_t n = posterior.item_count();
  const std::size_t count = posterior.particle_count();
  std::vector<double> flat;
  flat.reserve((n + 1) * count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t p = 0; p < count; ++p) {
    double share = 1.0;
    if (n > 0) {
      // Beta(1, n) by inversion: 1 - U^(1/n).
      share = 1.0 - std::pow(unit(rng), 1.0 / static_cast<double>(n));
      share = std::clamp(share, 1e-300, 1.0 - 1e-16);
    }
    auto row = posterior.particle(p);
    for (double v : row) flat.push_back(v * (1.0 - share));
    flat.push_back(share);
  }
  posterior.items_.push_back(item);
  posterior.values_ = std::move(flat);
  return posterior;
}

ScorePosterior rejuvenate(ScorePosterior posterior, const ComparisonTally& tally,
                          std::size_t steps, std::uint64_t seed) {
  const std::size_t n = posterior.item_count();
  if (steps == 0 || n < 2 || tally.empty()) return posterior;

  struct Term {
    std::size_t i, j;
    double wins_ij, wins_ji;
  };
  std::vector<Term> terms;
  for (const auto& [a, b] : tally.observed_pairs()) {
    terms.push_back({posterior.index_of(a), posterior.index_of(b),
                     static_cast<double>(tally.wins(a, b)),
                     static_cast<double>(tally.wins(b, a))});
  }
  std::vector<double> log_v(n);
  auto log_likelihood = [&](std::span<const double> v) {
    for (std::size_t i = 0; i < n; ++i) log_v[i] = std::log(v[i]);
    double ll = 0.0;
    for (const auto& t : terms) {
      ll += t.wins_ij * log_v[t.i] + t.wins_ji * log_v[t.j] -
            (t.wins_ij + t.wins_ji) * std::log(v[t.i] + v[t.j]);
    }
    return ll;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  std::gamma_distribution<double> total_mass(static_cast<double>(n), 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> current(n), proposal(n);

  for (std::size_t p = 0; p < posterior.particle_count(); ++p) {
    std::span<double> row(posterior.values_.data() + p * n, n);
    double ll = log_likelihood(row);
    for (std::size_t s = 0; s < steps; ++s) {
      // Unnormalized gamma representation: total mass is independent of the
      // ratios under the target, so it is redrawn from its Gamma(n) marginal.
      const double mass = total_mass(rng);
      double log_jacobian = 0.0;
      double mass_change = 0.0;
      double proposal_total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        current[i] = row[i] * mass;
        const double z = step(rng);
        proposal[i] = std::max(current[i] * std::exp(z), 1e-300);
        log_jacobian += z;
        mass_change += proposal[i] - current[i];
        proposal_total += proposal[i];
      }
      for (double& v : proposal) v /= proposal_total;
      const double proposal_ll = log_likelihood(proposal);
      const double log_accept = proposal_ll - ll + log_jacobian - mass_change;
      if (std::log(unit(rng)) < log_accept) {
        std::copy(proposal.begin(), proposal.end(), row.begin());
        ll = proposal_ll;
      }
    }
  }
  return posterior;
}

std::map<ItemId, double> rank_confidence(const ScorePosterior& posterior, std::size_t k) {
  const std::size_t n = posterior.item_count();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::invalid_argument, "k must be between 1 and the item count");
  }
  std::vector<double> mass(n, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t p = 0; p < posterior.particle_count(); ++p) {
    auto row = posterior.particle(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return row[a] > row[b] || (row[a] == row[b] && a < b);
                      });
    for (std::size_t r = 0; r < k; ++r) mass[order[r]] += posterior.weights()[p];
  }
  std::map<ItemId, double> out;
  for (std::size_t i = 0; i < n; ++i) out[posterior.items()[i]] = mass[i];
  return out;
}

}  // namespace gci::judgment
