#include "gci/service/server.hpp"

#include <httplib.h>

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <unordered_map>

#include "gci/common/error.hpp"
#include "gci/common/random.hpp"
#include "gci/common/seeding.hpp"
#include "gci/common/sha256.hpp"
#include "gci/deliberation/event_log.hpp"
#include "gci/service/views.hpp"

namespace gci::service {

using namespace deliberation;
using nlohmann::json;

namespace {

constexpr std::uint64_t kServerTaskStream = 31;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::forbidden: return 403;
    case ErrorCode::unknown_item:
    case ErrorCode::unknown_participant:
    case ErrorCode::unknown_agent: return 404;
    case ErrorCode::phase_conflict:
    case ErrorCode::unassigned_pair:
    case ErrorCode::duplicate_judgment:
    case ErrorCode::not_converged: return 409;
    case ErrorCode::invalid_argument:
    case ErrorCode::no_comparisons:
    case ErrorCode::degenerate_pair:
    case ErrorCode::malformed: return 422;
    case ErrorCode::broken_chain:
    case ErrorCode::sequence_gap:
    case ErrorCode::missing_session_created: return 500;
  }
  return 500;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw HttpError{422, "malformed", "request body must be a JSON object"};
  }
  return j;
}

std::string string_field(const json& body, const char* key, bool required = true) {
  if (!body.contains(key)) {
    if (required) throw HttpError{422, "malformed", std::string("missing field: ") + key};
    return {};
  }
  if (!body.at(key).is_string()) {
    throw HttpError{422, "malformed", std::string(key) + " must be a string"};
  }
  return body.at(key).get<std::string>();
}

std::string credential_digest(const std::string& session, const std::string& credential) {
  return sha256_hex("gci-credential\n" + session + "\n" + credential);
}

std::vector<Criterion> criteria_from(const json& body) {
  if (!body.contains("criteria") || !body.at("criteria").is_array()) {
    throw HttpError{422, "malformed", "criteria must be an array"};
  }
  std::vector<Criterion> out;
  for (const auto& c : body.at("criteria")) {
    if (!c.is_object() || !c.contains("weight") || !c.at("weight").is_number()) {
      throw HttpError{422, "malformed", "each criterion needs a name and numeric weight"};
    }
    Criterion crit{string_field(c, "name"), c.at("weight").get<double>(), {}};
    for (const auto& j : c.value("judgments", json::array())) {
      std::uint64_t count = 1;
      if (j.contains("count")) {
        if (!j.at("count").is_number_unsigned()) {
          throw HttpError{422, "malformed", "count must be a positive integer"};
        }
        count = j.at("count").get<std::uint64_t>();
      }
      crit.tally.record(string_field(j, "winner"), string_field(j, "loser"), count);
    }
    out.push_back(std::move(crit));
  }
  return out;
}

}  // namespace

ServerOptions options_from_env() {
  ServerOptions o;
  if (const char* dir = std::getenv("GCI_DATA_DIR"); dir && *dir) o.data_dir = dir;
  if (const char* bind = std::getenv("GCI_BIND_ADDR"); bind && *bind) {
    const std::string addr = bind;
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
      o.host = addr;
    } else {
      o.host = addr.substr(0, colon);
      o.port = std::stoi(addr.substr(colon + 1));
    }
  }
  if (const char* every = std::getenv("GCI_SNAPSHOT_EVERY"); every && *every) {
    o.snapshot_every = std::stoul(every);
  }
  return o;
}

const std::vector<RouteSpec>& route_table() {
  static const std::vector<RouteSpec> routes = {
      {"GET", "/healthz"},
      {"POST", "/sessions"},
      {"GET", "/sessions/{id}"},
      {"POST", "/sessions/{id}/participants"},
      {"POST", "/sessions/{id}/ideas"},
      {"GET", "/sessions/{id}/task"},
      {"POST", "/sessions/{id}/judgments"},
      {"GET", "/sessions/{id}/voice"},
      {"GET", "/sessions/{id}/contributions"},
      {"GET", "/sessions/{id}/log"},
      {"POST", "/sessions/{id}/decision-matrix"},
      {"POST", "/sessions/{id}/phase"},
  };
  return routes;
}

struct Server::Impl {
  ServerOptions options;
  SessionStore store;
  httplib::Server http;
  std::mutex cap_mutex;
  std::unordered_map<std::string, std::size_t> requests_by_token;

  explicit Impl(ServerOptions o)
      : options(std::move(o)), store({options.data_dir, options.snapshot_every}) {
    register_routes();
  }

  std::string token_for(const std::string& session, const std::string& credential) const {
    return sha256_hex("gci-token\n" + store.secret() + "\n" + session + "\n" + credential);
  }

  // Resolves the bearer token to a participant of `session`.
  Viewer authenticate(const httplib::Request& req, const std::string& session) {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
      throw HttpError{401, "unauthorized", "bearer token required"};
    }
    const auto digest = sha256_hex(header.substr(prefix.size()));
    auto viewer = store.read(session, [&](const Session& s) -> std::optional<Viewer> {
      if (const auto* p = s.find_by_token_digest(digest)) return Viewer{p->id, p->role};
      return std::nullopt;
    });
    if (!viewer) throw HttpError{401, "unauthorized", "invalid token"};
    std::lock_guard lock(cap_mutex);
    if (++requests_by_token[digest] > options.token_request_cap) {
      throw HttpError{429, "request_cap", "request cap reached for this token"};
    }
    return *viewer;
  }

  static void require_facilitator(const Viewer& v) {
    if (v.role != Role::facilitator) throw HttpError{403, "forbidden", "facilitator role required"};
  }

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Serializes a participant-facing body, refusing to send anything that
  // would reveal someone else's id.
  void send_to(httplib::Response& res, int status, const std::string& session,
               const Viewer& viewer, const json& body) {
    auto text = body.dump();
    const bool leak = store.read(
        session, [&](const Session& s) { return leaks_identity(s, viewer, text); });
    if (leak) {
      send(res, 500, error_body("masking", "response withheld"));
      return;
    }
    res.status = status;
    res.set_content(std::move(text), "application/json");
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const HttpError& e) {
        send(res, e.status, error_body(e.code, e.message));
      } catch (const Error& e) {
        send(res, status_for(e.code()), error_body(to_string(e.code()), e.what()));
      } catch (const UnknownSessionError& e) {
        send(res, 404, error_body("unknown_session", e.what()));
      } catch (const QuarantinedError& e) {
        send(res, 409, error_body("quarantined", e.what()));
      } catch (const json::exception& e) {
        send(res, 422, error_body("malformed", e.what()));
      } catch (const std::exception& e) {
        send(res, 500, error_body("internal", e.what()));
      }
    };
  }

  void route(const std::string& method, const std::string& path, Handler h) {
    std::string pattern = path;
    for (auto pos = pattern.find("{id}"); pos != std::string::npos; pos = pattern.find("{id}")) {
      pattern.replace(pos, 4, ":id");
    }
    if (method == "GET") {
      http.Get(pattern, guarded(std::move(h)));
    } else {
      http.Post(pattern, guarded(std::move(h)));
    }
  }

  void register_routes() {
    route("GET", "/healthz", [this](const httplib::Request&, httplib::Response& res) {
      json q = json::array();
      for (const auto& [id, _] : store.quarantined()) q.push_back(id);
      send(res, 200, {{"status", "ok"},
                      {"sessions", store.session_ids().size()},
                      {"quarantined", std::move(q)}});
    });

    route("POST", "/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto config = session_config_from_json(body.value("config", json::object()));
      auto credential = string_field(body, "credential", false);
      if (credential.empty()) credential = random_hex(16);
      const auto id = random_hex(8);
      const auto participant = random_hex(16);
      const auto token = token_for(id, credential);
      store.create(id, config, participant, credential_digest(id, credential), sha256_hex(token));
      send(res, 201, {{"session_id", id},
                      {"participant_id", participant},
                      {"alias", "facilitator-1"},
                      {"role", "facilitator"},
                      {"token", token}});
    });

    route("GET", "/sessions/{id}", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      const auto body = store.read(id, [&](const Session& s) { return session_view(s, viewer); });
      send_to(res, 200, id, viewer, body);
    });

    route("POST", "/sessions/{id}/participants", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto body = parse_body(req);
      auto credential = string_field(body, "credential", false);
      if (credential.empty()) credential = random_hex(16);
      const auto token = token_for(id, credential);
      const auto digest = credential_digest(id, credential);
      auto [status, participant] = store.write(id, [&](Session& s) {
        const auto before = s.log().size();
        const auto& p = s.join(random_hex(16), Role::contributor, digest, sha256_hex(token));
        return std::pair{s.log().size() == before ? 200 : 201, Viewer{p.id, p.role}};
      });
      const auto alias = store.read(id, [&](const Session& s) {
        return s.find_participant(participant.id)->alias;
      });
      send_to(res, status, id, participant,
              {{"participant_id", participant.id},
               {"alias", alias},
               {"role", std::string(to_string(participant.role))},
               {"token", token}});
    });

    route("POST", "/sessions/{id}/ideas", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      const auto body = parse_body(req);
      const auto text = string_field(body, "text");
      std::optional<ItemId> parent;
      if (body.contains("parent") && !body.at("parent").is_null()) {
        parent = string_field(body, "parent");
      }
      const auto item = store.write(id, [&](Session& s) {
        return s.submit_idea(viewer.id, text, parent);
      });
      send_to(res, 201, id, viewer, {{"item", item}});
    });

    route("GET", "/sessions/{id}/task", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      auto [result, body] = store.write(id, [&](Session& s) {
        const auto seed = derive_seed(s.config().seed, {kServerTaskStream, s.log().size()});
        auto r = s.next_task(viewer.id, seed);
        json view = std::holds_alternative<Task>(r) ? task_view(s, std::get<Task>(r)) : json();
        return std::pair{r, view};
      });
      if (const auto* signal = std::get_if<TaskSignal>(&result)) {
        // 204 carries no body, so the signal travels in a header.
        res.status = 204;
        res.set_header("X-GCI-Signal", std::string(to_string(*signal)));
        return;
      }
      send_to(res, 200, id, viewer, body);
    });

    route("POST", "/sessions/{id}/judgments", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      const auto body = parse_body(req);
      const auto winner = string_field(body, "winner");
      const auto loser = string_field(body, "loser");
      const auto key = req.get_header_value("Idempotency-Key");
      if (key.size() > 200) throw HttpError{422, "malformed", "Idempotency-Key too long"};
      const auto view = store.write(id, [&](Session& s) {
        return voice_view(s, s.record_judgment(viewer.id, winner, loser, key), viewer);
      });
      send_to(res, 200, id, viewer, view);
    });

    route("GET", "/sessions/{id}/voice", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      const bool facilitator = req.get_param_value("view") == "facilitator";
      if (facilitator) require_facilitator(viewer);
      double threshold = 0.5;
      if (req.has_param("threshold")) {
        try {
          threshold = std::stod(req.get_param_value("threshold"));
        } catch (const std::exception&) {
          throw HttpError{422, "malformed", "threshold must be a number"};
        }
      }
      const auto view = store.read(id, [&](const Session& s) {
        return facilitator ? facilitator_view(s, viewer, threshold)
                           : voice_view(s, s.collective_voice(), viewer);
      });
      send_to(res, 200, id, viewer, view);
    });

    route("GET", "/sessions/{id}/contributions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      require_facilitator(viewer);
      send(res, 200,
           store.read(id, [&](const Session& s) { return contributions_view(s, viewer); }));
    });

    route("GET", "/sessions/{id}/log", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      require_facilitator(viewer);
      auto text = store.read(id, [&](const Session& s) {
        std::ostringstream out;
        write_jsonl(out, s.log().events());
        return out.str();
      });
      res.status = 200;
      res.set_content(std::move(text), "application/x-ndjson");
    });

    route("POST", "/sessions/{id}/decision-matrix", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      require_facilitator(viewer);
      const auto body = parse_body(req);
      if (!body.contains("candidates") || !body.at("candidates").is_array()) {
        throw HttpError{422, "malformed", "candidates must be an array of item ids"};
      }
      auto candidates = body.at("candidates").get<std::vector<ItemId>>();
      const auto criteria = criteria_from(body);
      const auto view = store.write(id, [&](Session& s) {
        return decision_view(s.score_decision(viewer.id, candidates, criteria));
      });
      send(res, 200, view);
    });

    route("POST", "/sessions/{id}/phase", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto viewer = authenticate(req, id);
      require_facilitator(viewer);
      const auto target = parse_phase(string_field(parse_body(req), "phase"));
      const auto view = store.write(id, [&](Session& s) {
        s.change_phase(viewer.id, target);
        return session_view(s, viewer);
      });
      send(res, 200, view);
    });
  }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Server::~Server() = default;

int Server::bind() {
  const int port = impl_->options.port == 0
                       ? impl_->http.bind_to_any_port(impl_->options.host)
                       : (impl_->http.bind_to_port(impl_->options.host, impl_->options.port)
                              ? impl_->options.port
                              : -1);
  if (port < 0) {
    throw std::runtime_error("cannot bind " + impl_->options.host + ":" +
                             std::to_string(impl_->options.port));
  }
  return port;
}

void Server::serve() { impl_->http.listen_after_bind(); }
void Server::stop() { impl_->http.stop(); }
SessionStore& Server::store() { return impl_->store; }

}  // namespace gci::service
