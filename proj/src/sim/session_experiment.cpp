#include "gci/sim/session_experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "gci/common/error.hpp"
#include "gci/common/seeding.hpp"
#include "gci/deliberation/event_log.hpp"
#include "gci/judgment/bradley_terry.hpp"
#include "gci/sim/kendall.hpp"

namespace gci::sim {

using namespace deliberation;

namespace {

constexpr std::uint64_t kTruthStream = 21;
constexpr std::uint64_t kSessionStream = 22;
constexpr std::uint64_t kTaskStream = 23;
constexpr std::uint64_t kJudgeStream = 24;

double unit(std::uint64_t seed) {
  std::uint64_t state = seed;
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

std::vector<double> draw_truth(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) {
    // Exp(1) can round to 0 in principle; strengths must stay positive.
    do x = exp1(rng);
    while (x <= 0.0);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

std::size_t item_index(const ItemId& id) { return std::stoul(id.substr(5)) - 1; }

void validate(const SessionExperimentConfig& c) {
  if (c.items < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 items");
  if (c.agents < 1) throw Error(ErrorCode::invalid_argument, "need at least 1 agent");
  if (c.budget < 1) throw Error(ErrorCode::invalid_argument, "budget must be at least 1");
  if (c.seeds < 1) throw Error(ErrorCode::invalid_argument, "need at least 1 seed");
  if (c.truth) {
    if (c.truth->size() != c.items) {
      throw Error(ErrorCode::invalid_argument, "truth length differs from item count");
    }
    for (double v : *c.truth) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, "truth strengths must be positive");
      }
    }
  }
}

}  // namespace

nlohmann::json to_json(const SessionExperimentConfig& c) {
  nlohmann::json j = {{"items", c.items},         {"agents", c.agents},
                      {"budget", c.budget},       {"seeds", c.seeds},
                      {"base_seed", c.base_seed}, {"policy", std::string(to_string(c.policy))},
                      {"particles", c.particles}, {"top_k", c.top_k}};
  j["truth"] = c.truth ? nlohmann::json(*c.truth) : nlohmann::json(nullptr);
  return j;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SessionRun run_session_simulation(const SessionExperimentConfig& config, std::uint64_t seed) {
  validate(config);
  SessionRun run;
  run.seed = seed;
  if (config.truth) {
    run.truth = *config.truth;
    double sum = 0.0;
    for (double v : run.truth) sum += v;
    for (double& v : run.truth) v /= sum;
  } else {
    run.truth = draw_truth(config.items, derive_seed(seed, {kTruthStream}));
  }

  SessionConfig sc;
  sc.budget = config.budget;
  sc.min_judgments = config.budget;  // spend the whole budget
  sc.particles = config.particles;
  sc.top_k = config.top_k;
  sc.policy = config.policy;
  sc.seed = derive_seed(seed, {kSessionStream});
  auto session = Session::create("sim-" + std::to_string(seed), sc, "facilitator");

  // An agent is a judging model, not a single reviewer: when its current
  // identity has no eligible pair left it enrolls a fresh one, so small item
  // sets can still absorb the whole budget. Ideas stay with the first
  // identity.
  std::vector<std::string> identity;
  std::vector<std::size_t> generation(config.agents, 0);
  for (std::size_t a = 0; a < config.agents; ++a) {
    identity.push_back("agent-" + std::to_string(a));
    session.join(identity.back());
  }
  for (std::size_t i = 0; i < config.items; ++i) {
    session.submit_idea(identity[i % config.agents], "idea " + std::to_string(i));
  }
  session.change_phase("facilitator", Phase::reviewing);

  std::uint64_t requests = 0;
  std::vector<bool> active(config.agents, true);
  bool any_active = true;
  while (any_active) {
    any_active = false;
    for (std::size_t a = 0; a < config.agents; ++a) {
      if (!active[a]) continue;
      auto task = session.next_task(identity[a], derive_seed(seed, {kTaskStream, requests++}));
      if (std::holds_alternative<TaskSignal>(task) &&
          std::get<TaskSignal>(task) == TaskSignal::no_eligible_pairs) {
        identity[a] = "agent-" + std::to_string(a) + "." + std::to_string(++generation[a]);
        session.join(identity[a]);
        task = session.next_task(identity[a], derive_seed(seed, {kTaskStream, requests++}));
      }
      const auto* t = std::get_if<Task>(&task);
      if (!t) {
        active[a] = false;
        continue;
      }
      any_active = true;
      const double vf = run.truth[item_index(t->first)];
      const double vs = run.truth[item_index(t->second)];
      const bool first_wins =
          unit(derive_seed(seed, {kJudgeStream, session.judgments().size()})) < vf / (vf + vs);
      const auto voice = first_wins ? session.record_judgment(identity[a], t->first, t->second)
                                    : session.record_judgment(identity[a], t->second, t->first);
      if (!run.convergence_judgment && voice.convergence >= sc.convergence_threshold) {
        run.convergence_judgment = session.judgments().size();
      }
    }
  }

  run.judgments = session.judgments().size();
  run.estimate.assign(config.items, 0.0);
  for (const auto& e : session.collective_voice().entries) {
    run.estimate[item_index(e.item)] = e.mean;
  }
  if (!session.tally().empty()) {
    const auto fit = judgment::fit_scores(session.tally());
    run.fitted.assign(config.items, 0.0);
    for (std::size_t i = 0; i < config.items; ++i) {
      const auto id = "item-" + std::to_string(i + 1);
      if (fit.scores.contains(id)) run.fitted[i] = fit.scores.strength(id);
    }
  }
  run.kendall_tau = kendall_tau_b(run.truth, run.estimate);
  const auto argmax = [](const std::vector<double>& v) {
    return std::max_element(v.begin(), v.end()) - v.begin();
  };
  run.top1_match = argmax(run.truth) == argmax(run.estimate);
  for (std::size_t i = 0; i < config.items; ++i) {
    run.max_abs_error = std::max(run.max_abs_error, std::abs(run.estimate[i] - run.truth[i]));
  }

  // Audit check: the serialized log alone must rebuild the same state.
  std::ostringstream log_text;
  write_jsonl(log_text, session.log().events());
  run.event_log = log_text.str();
  run.state_hash = session.state_hash();
  std::istringstream in(run.event_log);
  run.replay_matches = Session::replay(read_jsonl(in)).state_hash() == run.state_hash;
  return run;
}

SessionExperimentReport run_session_experiment(const SessionExperimentConfig& config) {
  validate(config);
  SessionExperimentReport report;
  report.config = config;
  report.runs.resize(config.seeds);

  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, config.seeds);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.seeds);
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds; i = next++) {
      try {
        report.runs[i] = run_session_simulation(config, config.base_seed + i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> tau, used, top1, err;
  for (const auto& r : report.runs) {
    tau.push_back(r.kendall_tau);
    used.push_back(static_cast<double>(r.judgments));
    top1.push_back(r.top1_match ? 1.0 : 0.0);
    err.push_back(r.max_abs_error);
  }
  report.kendall_tau = summarize(tau);
  report.judgments = summarize(used);
  report.top1_match = summarize(top1);
  report.max_abs_error = summarize(err);
  return report;
}

nlohmann::json to_json(const SessionExperimentReport& report) {
  auto summary = [](const Summary& s) {
    return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}, {"seeds", s.count}};
  };
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"seed", r.seed},
                    {"kendall_tau", r.kendall_tau},
                    {"judgments", r.judgments},
                    {"convergence_judgment", r.convergence_judgment
                                                 ? nlohmann::json(*r.convergence_judgment)
                                                 : nlohmann::json(nullptr)},
                    {"top1_match", r.top1_match},
                    {"max_abs_error", r.max_abs_error},
                    {"replay_matches", r.replay_matches},
                    {"state_hash", r.state_hash},
                    {"truth", r.truth},
                    {"estimate", r.estimate},
                    {"fitted", r.fitted}});
  }
  return {{"config", to_json(report.config)},
          {"aggregate",
           {{"kendall_tau", summary(report.kendall_tau)},
            {"judgments", summary(report.judgments)},
            {"top1_match", summary(report.top1_match)},
            {"max_abs_error", summary(report.max_abs_error)}}},
          {"runs", std::move(runs)}};
}

void write_runs_csv(std::ostream& out, const SessionExperimentReport& report) {
  out << "seed,policy,kendall_tau,judgments,convergence_judgment,top1_match,max_abs_error,"
         "replay_matches\n";
  const auto old = out.precision(12);
  for (const auto& r : report.runs) {
    out << r.seed << ',' << to_string(report.config.policy) << ',' << r.kendall_tau << ','
        << r.judgments << ','
        << (r.convergence_judgment ? std::to_string(*r.convergence_judgment) : std::string())
        << ',' << (r.top1_match ? 1 : 0) << ',' << r.max_abs_error << ','
        << (r.replay_matches ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace gci::sim
