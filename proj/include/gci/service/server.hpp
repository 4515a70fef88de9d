#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gci/service/session_store.hpp"

namespace gci::service {

struct ServerOptions {
  std::filesystem::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t snapshot_every = 100;
  std::size_t token_request_cap = 1'000'000;
};

/// Reads GCI_DATA_DIR, GCI_BIND_ADDR (host:port) and GCI_SNAPSHOT_EVERY over
/// the defaults.
ServerOptions options_from_env();

struct RouteSpec {
  std::string method;
  std::string path;  // OpenAPI template syntax, e.g. /sessions/{id}/task
};

/// Every route the server registers; docs/openapi.json must list the same.
const std::vector<RouteSpec>& route_table();

class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();

  /// Binds the listening socket and returns the port.
  int bind();
  /// Serves until stop(); call bind() first.
  void serve();
  void stop();

  SessionStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gci::service
