#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gci/regret/bandit.hpp"

namespace gci::regret {

struct ExperimentConfig {
  std::vector<double> means;
  std::size_t agents = 1;
  std::uint64_t horizon = 1000;
  bool sharing = false;
  bool collisions = false;
  /// Trusted neighbors per agent when sharing; defaults to everyone else.
  std::optional<std::size_t> trust_k;
  std::uint64_t seed = 0;
  Policy policy = Policy::thompson;
};

/// Accepts `{"means":[...],"agents":N,"horizon":T,"sharing":bool,
/// "collisions":bool,"trust_k":K,"seed":S}`; "policy" ("thompson"|"ucb")
/// is optional. Throws gci::Error(malformed) on bad input.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

struct EpochRecord {
  std::uint64_t epoch = 0;
  AgentId agent = 0;
  std::size_t arm = 0;
  double reward = 0.0;
  double cum_regret = 0.0;
};

struct ExperimentResult {
  /// Epoch-major: agents of epoch 0, then epoch 1, ...
  std::vector<EpochRecord> records;
  std::size_t agents = 0;
  /// Number of agents sharing an arm with someone else, per epoch.
  std::vector<std::uint32_t> colliding_agents;

  double cumulative_regret(AgentId agent, std::uint64_t epoch) const {
    return records[epoch * agents + agent].cum_regret;
  }
  /// Mean over agents of cumulative regret after `epochs` epochs.
  double mean_cumulative_regret(std::uint64_t epochs) const;
  /// Fraction of epochs in [from, to) where any two agents chose the same arm.
  double collision_frequency(std::uint64_t from, std::uint64_t to) const;
};

/// Lock-step simulation: every agent selects, payoffs are drawn (and split
/// on collisions), own beliefs update, then trusted neighbor observations
/// are exchanged. Regret per epoch is best mean minus chosen mean, measured
/// before collision splitting. Deterministic per seed.
ExperimentResult run_regret_experiment(const ExperimentConfig& config);

/// `epoch,agent,arm,reward,cum_regret`
void write_results_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace gci::regret
