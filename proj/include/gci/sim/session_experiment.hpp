#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gci/deliberation/session.hpp"

namespace gci::sim {

struct SessionExperimentConfig {
  std::size_t items = 20;
  std::size_t agents = 15;
  std::size_t budget = 300;
  std::size_t seeds = 20;
  std::uint64_t base_seed = 0;
  deliberation::PairPolicy policy = deliberation::PairPolicy::adaptive;
  /// Ground truth shared by every seed; drawn from Dirichlet(1) per seed
  /// when absent.
  std::optional<std::vector<double>> truth;
  std::size_t particles = 1000;
  std::size_t top_k = 3;
  std::size_t threads = 0;  // 0: hardware concurrency
};

nlohmann::json to_json(const SessionExperimentConfig& config);

struct SessionRun {
  std::uint64_t seed = 0;
  std::vector<double> truth;     // by item index
  std::vector<double> estimate;  // posterior means from the collective voice
  std::vector<double> fitted;    // static fit of the session tally
  double kendall_tau = 0.0;
  std::size_t judgments = 0;
  /// First judgment count at which the voice reported convergence at or
  /// above the session threshold.
  std::optional<std::size_t> convergence_judgment;
  bool top1_match = false;
  double max_abs_error = 0.0;  // estimate vs truth
  bool replay_matches = false;
  std::string state_hash;
  std::string event_log;  // JSON Lines, for audit checks
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

struct SessionExperimentReport {
  SessionExperimentConfig config;
  std::vector<SessionRun> runs;
  Summary kendall_tau;
  Summary judgments;
  Summary top1_match;
  Summary max_abs_error;
};

/// Drives one deliberation end to end through the Session interface: agent
/// a authors ideas i with i % agents == a, everyone then requests tasks in
/// turn and answers as a Bradley-Terry judge of the ground truth until no
/// agent gets another task. The log is serialized, re-read and replayed.
SessionRun run_session_simulation(const SessionExperimentConfig& config, std::uint64_t seed);

/// Seeds base_seed, base_seed + 1, ... in a worker pool; results are in
/// seed order regardless of scheduling.
SessionExperimentReport run_session_experiment(const SessionExperimentConfig& config);

nlohmann::json to_json(const SessionExperimentReport& report);
void write_runs_csv(std::ostream& out, const SessionExperimentReport& report);

}  // namespace gci::sim
