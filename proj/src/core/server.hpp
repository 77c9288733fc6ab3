#pragma once

#include <atomic>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "env.hpp"

namespace quadsim {

/// Wire protocol for one connection. Each request line is a JSON object
/// {"op": make|reset|step|close|spec, "session": id, "payload": {...}} and
/// each response line is {"ok": true, "payload": {...}} or
/// {"ok": false, "error": "..."}. Sessions belong to the handler that made them.
/// A `make` payload with "num_envs" > 1 creates a vector session: reset and
/// step then take and return one entry per sub-environment.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(AppConfig defaults);

  /// Never throws; protocol and environment failures become ok=false replies.
  std::string handle_line(const std::string& line);
  std::size_t session_count() const { return sessions_.size(); }

 private:
  nlohmann::json dispatch(const nlohmann::json& request);
  struct Session {
    std::vector<std::unique_ptr<Environment>> envs;
    bool vectorized = false;
  };
  Session& session(const nlohmann::json& request);

  AppConfig defaults_;
  std::map<std::string, Session> sessions_;
};

/// Observation/action space description and derived limits for `env`.
nlohmann::json space_description(const Environment& env);

/// Serves requests line by line until EOF.
void serve_stream(std::istream& in, std::ostream& out, const AppConfig& defaults);

class TcpServer {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port.
  TcpServer(AppConfig defaults, const std::string& host, int port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }
  /// Accepts connections until stop(); one handler thread per client.
  void run();
  void stop();

 private:
  void handle_connection(int fd);

  AppConfig defaults_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> handlers_;
};

}  // namespace quadsim
