#include "gci/regret/experiment.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <random>

#include "gci/common/error.hpp"
#include "gci/common/seeding.hpp"
#include "gci/regret/cooperation.hpp"

namespace gci::regret {

namespace {

enum Stream : std::uint64_t { kSelect = 1, kPayoff = 2, kBinarize = 3 };

bool bernoulli(double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::malformed, "experiment config: " + what);
  };
  if (!j.is_object()) fail("expected a JSON object");
  ExperimentConfig c;
  try {
    if (!j.contains("means") || !j.at("means").is_array()) fail("\"means\" must be an array");
    c.means = j.at("means").get<std::vector<double>>();
    c.agents = j.value("agents", std::size_t{1});
    c.horizon = j.value("horizon", std::uint64_t{1000});
    c.sharing = j.value("sharing", false);
    c.collisions = j.value("collisions", false);
    if (j.contains("trust_k") && !j.at("trust_k").is_null()) {
      c.trust_k = j.at("trust_k").get<std::size_t>();
    }
    c.seed = j.value("seed", std::uint64_t{0});
    const auto policy = j.value("policy", std::string("thompson"));
    if (policy == "thompson") c.policy = Policy::thompson;
    else if (policy == "ucb") c.policy = Policy::ucb;
    else fail("unknown policy \"" + policy + "\"");
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
  if (c.means.empty()) fail("at least one arm mean is required");
  for (double m : c.means) {
    if (!(m >= 0.0 && m <= 1.0)) fail("means must lie in [0, 1]");
  }
  if (c.agents == 0) fail("agents must be at least 1");
  if (c.horizon == 0) fail("horizon must be at least 1");
  if (c.trust_k && *c.trust_k > c.agents - 1) fail("trust_k exceeds the number of other agents");
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"means", c.means},     {"agents", c.agents},
                      {"horizon", c.horizon}, {"sharing", c.sharing},
                      {"collisions", c.collisions}, {"seed", c.seed},
                      {"policy", c.policy == Policy::thompson ? "thompson" : "ucb"}};
  j["trust_k"] = c.trust_k ? nlohmann::json(*c.trust_k) : nlohmann::json(nullptr);
  return j;
}

double ExperimentResult::mean_cumulative_regret(std::uint64_t epochs) const {
  if (epochs == 0) return 0.0;
  double total = 0.0;
  for (AgentId a = 0; a < agents; ++a) total += cumulative_regret(a, epochs - 1);
  return total / static_cast<double>(agents);
}

double ExperimentResult::collision_frequency(std::uint64_t from, std::uint64_t to) const {
  to = std::min<std::uint64_t>(to, colliding_agents.size());
  if (to <= from) return 0.0;
  std::uint64_t hits = 0;
  for (std::uint64_t t = from; t < to; ++t) hits += colliding_agents[t] > 0 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(to - from);
}

ExperimentResult run_regret_experiment(const ExperimentConfig& config) {
  if (config.means.empty() || config.agents == 0 || config.horizon == 0) {
    throw Error(ErrorCode::invalid_argument, "experiment needs arms, agents and a horizon");
  }
  const std::size_t n_agents = config.agents;
  const std::size_t k = config.trust_k.value_or(n_agents - 1);
  if (k > n_agents - 1) throw Error(ErrorCode::invalid_argument, "trust_k too large");
  const double best = *std::max_element(config.means.begin(), config.means.end());

  std::vector<BanditState> states(n_agents, make_bandit(config.means.size(), config.policy));
  std::vector<double> regret(n_agents, 0.0);
  // agreement_count[a][b]: epochs where agents a and b chose the same arm.
  std::vector<std::vector<std::uint64_t>> agreement_count(
      n_agents, std::vector<std::uint64_t>(n_agents, 0));

  ExperimentResult result;
  result.agents = n_agents;
  result.records.reserve(config.horizon * n_agents);
  result.colliding_agents.reserve(config.horizon);

  std::vector<std::size_t> arms(n_agents);
  std::vector<double> payout(n_agents);
  std::vector<int> learned(n_agents);

  for (std::uint64_t t = 0; t < config.horizon; ++t) {
    for (AgentId a = 0; a < n_agents; ++a) {
      arms[a] = select_arm(states[a], derive_seed(config.seed, {kSelect, a, t}));
    }

    std::map<std::size_t, std::uint32_t> crowd;
    for (auto arm : arms) ++crowd[arm];
    std::uint32_t colliding = 0;
    for (auto arm : arms) colliding += crowd[arm] > 1 ? 1 : 0;
    result.colliding_agents.push_back(colliding);

    if (config.collisions) {
      std::map<AgentId, std::size_t> choices;
      std::map<std::size_t, double> payoffs;
      for (AgentId a = 0; a < n_agents; ++a) {
        choices[a] = arms[a];
        if (!payoffs.contains(arms[a])) {
          payoffs[arms[a]] =
              bernoulli(config.means[arms[a]], derive_seed(config.seed, {kPayoff, arms[a], t}))
                  ? 1.0
                  : 0.0;
        }
      }
      const auto split = resolve_collisions(choices, payoffs);
      for (AgentId a = 0; a < n_agents; ++a) {
        payout[a] = split.at(a);
        // A fractional payoff is learned from as a Bernoulli draw with that mean.
        learned[a] = payout[a] == 1.0 || (payout[a] > 0.0 &&
                                          bernoulli(payout[a],
                                                    derive_seed(config.seed, {kBinarize, a, t})))
                         ? 1
                         : 0;
      }
    } else {
      for (AgentId a = 0; a < n_agents; ++a) {
        learned[a] =
            bernoulli(config.means[arms[a]], derive_seed(config.seed, {kPayoff, a, t})) ? 1 : 0;
        payout[a] = learned[a];
      }
    }

    for (AgentId a = 0; a < n_agents; ++a) {
      states[a] = update_own(std::move(states[a]), arms[a], learned[a]);
      regret[a] += best - config.means[arms[a]];
      result.records.push_back({t, a, arms[a], payout[a], regret[a]});
    }

    if (config.sharing && n_agents > 1) {
      for (AgentId a = 0; a < n_agents; ++a) {
        for (AgentId b = 0; b < n_agents; ++b) {
          if (arms[a] == arms[b]) ++agreement_count[a][b];
        }
      }
      std::vector<NeighborObservation> observations;
      for (AgentId b = 0; b < n_agents; ++b) {
        observations.push_back({b, arms[b], static_cast<double>(learned[b]), t});
      }
      for (AgentId a = 0; a < n_agents; ++a) {
        std::map<AgentId, double> agreement;
        for (AgentId b = 0; b < n_agents; ++b) {
          if (b != a) agreement[b] = static_cast<double>(agreement_count[a][b]) / static_cast<double>(t + 1);
        }
        const auto trust = trust_from_agreement(a, agreement, k);
        std::vector<NeighborObservation> incoming;
        for (const auto& obs : observations) {
          if (obs.agent != a) incoming.push_back(obs);
        }
        states[a] = update_social(std::move(states[a]), incoming, trust);
      }
    }
  }
  return result;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "epoch,agent,arm,reward,cum_regret\n";
  out.precision(12);
  for (const auto& r : result.records) {
    out << r.epoch << ',' << r.agent << ',' << r.arm << ',' << r.reward << ',' << r.cum_regret
        << '\n';
  }
}

}  // namespace gci::regret
