// gci: command-line entry point for fitting, simulations and the service.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "gci/common/error.hpp"
#include "gci/deliberation/event_log.hpp"
#include "gci/deliberation/session.hpp"
#include "gci/judgment/bradley_terry.hpp"
#include "gci/judgment/comparison_csv.hpp"
#include "gci/regret/experiment.hpp"
#include "gci/service/server.hpp"
#include "gci/sim/session_experiment.hpp"

namespace {

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gci::Error(gci::ErrorCode::invalid_argument, "cannot open " + path);
  return in;
}

int run_fit(const std::string& input, double epsilon) {
  auto in = open_input(input);
  const auto tally = gci::judgment::tally_records(gci::judgment::read_comparison_csv(in));
  gci::judgment::FitOptions options;
  options.epsilon = epsilon;
  const auto fit = gci::judgment::fit_scores(tally, options);
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [item, v] : fit.scores.to_map()) scores[item] = v;
  std::cout << nlohmann::json{{"scores", scores},
                              {"epsilon", fit.epsilon},
                              {"loglik", fit.log_likelihood},
                              {"iterations", fit.iterations},
                              {"converged", fit.converged}}
                   .dump(2)
            << "\n";
  return 0;
}

std::vector<double> parse_truth(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--truth expects comma-separated numbers");
    }
  }
  return out;
}

int run_sim_session(gci::sim::SessionExperimentConfig config, const std::string& policy,
                    const std::string& truth, const std::filesystem::path& out_dir) {
  try {
    config.policy = gci::deliberation::parse_pair_policy(policy);
  } catch (const gci::Error&) {
    throw UsageError("--policy must be adaptive or roundrobin");
  }
  if (!truth.empty()) config.truth = parse_truth(truth);
  if (config.truth && config.truth->size() != config.items) {
    throw UsageError("--truth needs one value per item");
  }
  const auto report = gci::sim::run_session_experiment(config);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream json_out(out_dir / "session_report.json");
    json_out << gci::sim::to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream csv_out(out_dir / "session_runs.csv");
    gci::sim::write_runs_csv(csv_out, report);
  }
  std::filesystem::create_directories(out_dir / "logs");
  for (const auto& r : report.runs) {
    std::ofstream log_out(out_dir / "logs" / ("seed-" + std::to_string(r.seed) + ".jsonl"));
    log_out << r.event_log;
  }
  std::cout << "policy " << gci::deliberation::to_string(config.policy) << ": kendall tau "
            << report.kendall_tau.mean << " +/- " << report.kendall_tau.stddev << " over "
            << report.kendall_tau.count << " seeds; top-1 match rate " << report.top1_match.mean
            << "\n";
  for (const auto& r : report.runs) {
    if (!r.replay_matches) {
      std::cerr << "replay mismatch for seed " << r.seed << "\n";
      return kDataError;
    }
  }
  return 0;
}

int run_sim_bandit(const std::string& config_path, const std::string& out_path) {
  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open config " + config_path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw UsageError("config is not valid JSON");
  gci::regret::ExperimentConfig config;
  try {
    config = gci::regret::parse_experiment_config(j);
  } catch (const gci::Error& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  const auto result = gci::regret::run_regret_experiment(config);
  if (out_path.empty()) {
    gci::regret::write_results_csv(std::cout, result);
  } else {
    std::ofstream out(out_path);
    if (!out) throw gci::Error(gci::ErrorCode::invalid_argument, "cannot write " + out_path);
    gci::regret::write_results_csv(out, result);
  }
  return 0;
}

int run_verify(const std::string& path) {
  auto in = open_input(path);
  const auto events = gci::deliberation::read_jsonl(in);
  const auto session = gci::deliberation::Session::replay(events);
  std::cout << nlohmann::json{{"session_id", session.id()},
                              {"events", events.size()},
                              {"phase", std::string(gci::deliberation::to_string(session.phase()))},
                              {"state_hash", session.state_hash()}}
                   .dump(2)
            << "\n";
  return 0;
}

int run_serve(gci::service::ServerOptions options) {
  // Handle termination on a dedicated thread; stopping the server from a
  // signal handler proper is not async-signal-safe.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gci::service::Server server(options);
  const int port = server.bind();
  std::cout << "listening on http://" << options.host << ":" << port << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparative-judgment deliberation engine"};
  app.require_subcommand(1);

  std::string fit_input;
  double fit_epsilon = 0.1;
  auto* fit = app.add_subcommand("fit", "Fit Bradley-Terry scores to a comparisons CSV");
  fit->add_option("--input", fit_input, "CSV with winner,loser[,reviewer,timestamp]")->required();
  fit->add_option("--epsilon", fit_epsilon, "Pseudo-wins added to each observed pair")
      ->check(CLI::NonNegativeNumber);

  auto* sim = app.add_subcommand("sim", "Run simulations");
  sim->require_subcommand(1);

  gci::sim::SessionExperimentConfig session_config;
  std::string policy = "adaptive";
  std::string truth;
  std::string out_dir = "results";
  auto* sim_session = sim->add_subcommand("session", "Synthetic-agent deliberations");
  sim_session->add_option("--items", session_config.items)->required()->check(CLI::Range(2, 100000));
  sim_session->add_option("--agents", session_config.agents)->required()->check(CLI::Range(1, 100000));
  sim_session->add_option("--budget", session_config.budget)->required()->check(CLI::Range(1, 100000000));
  sim_session->add_option("--seeds", session_config.seeds, "Number of seeds")->check(CLI::Range(1, 100000));
  sim_session->add_option("--seed", session_config.base_seed, "First seed");
  sim_session->add_option("--policy", policy, "adaptive or roundrobin");
  sim_session->add_option("--truth", truth, "Comma-separated ground-truth strengths");
  sim_session->add_option("--particles", session_config.particles)->check(CLI::Range(1, 100000));
  sim_session->add_option("--threads", session_config.threads);
  sim_session->add_option("--out", out_dir, "Output directory");

  std::string bandit_config;
  std::string bandit_out;
  auto* sim_bandit = sim->add_subcommand("bandit", "Cooperative bandit regret experiment");
  sim_bandit->add_option("--config", bandit_config, "Experiment JSON")->required();
  sim_bandit->add_option("--out", bandit_out, "CSV path (default stdout)");

  std::string verify_log;
  auto* verify = app.add_subcommand("verify", "Verify and replay a session event log");
  verify->add_option("--log", verify_log, "events.jsonl")->required();

  auto serve_options = gci::service::options_from_env();
  std::string bind_addr;
  std::string data_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--data-dir", data_dir, "Overrides GCI_DATA_DIR");
  serve->add_option("--bind", bind_addr, "host:port, overrides GCI_BIND_ADDR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*fit) return run_fit(fit_input, fit_epsilon);
    if (*sim_session) {
      if (session_config.seeds == 0) session_config.seeds = 20;
      return run_sim_session(session_config, policy, truth, out_dir);
    }
    if (*sim_bandit) return run_sim_bandit(bandit_config, bandit_out);
    if (*verify) return run_verify(verify_log);
    if (*serve) {
      if (!data_dir.empty()) serve_options.data_dir = data_dir;
      if (!bind_addr.empty()) {
        const auto colon = bind_addr.rfind(':');
        if (colon == std::string::npos) throw UsageError("--bind expects host:port");
        serve_options.host = bind_addr.substr(0, colon);
        try {
          serve_options.port = std::stoi(bind_addr.substr(colon + 1));
        } catch (const std::exception&) {
          throw UsageError("--bind expects host:port");
        }
      }
      return run_serve(serve_options);
    }
  } catch (const UsageError& e) {
    std::cerr << "gci: " << e.what() << "\n";
    return kUsageError;
  } catch (const gci::Error& e) {
    std::cerr << "gci: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "gci: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
