#include "server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include "error.hpp"

namespace quadsim {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_next_session{1};

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json ok(json payload) { return {{"ok", true}, {"payload", std::move(payload)}}; }
json failure(const std::string& msg) { return {{"ok", false}, {"error", msg}}; }

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

TorqueInput parse_action(const json& action) {
  if (!action.is_array() || action.size() != 3 ||
      !std::all_of(action.begin(), action.end(), [](const json& v) { return v.is_number(); })) {
    throw Error(ErrorCode::kProtocol, "each action must be an array of 3 numbers");
  }
  return {action[0].get<double>(), action[1].get<double>(), action[2].get<double>()};
}

json info_json(const StepInfo& i) {
  return {{"state", vec_json(i.state)},
          {"reference", vec_json(i.reference)},
          {"clamped_action", vec_json(i.clamped_action)},
          {"realized_torque", vec_json(i.realized_torque)},
          {"motor_speeds", vec_json(i.motor_speeds)},
          {"saturated", i.saturated},
          {"time", i.time}};
}

std::uint64_t parse_seed(const json& payload) {
  if (!payload["seed"].is_number_unsigned()) throw Error(ErrorCode::kProtocol, "'seed' must be a non-negative integer");
  return payload["seed"].get<std::uint64_t>();
}

}  // namespace

json space_description(const Environment& env) {
  const StateVector& soft = env.state_limits().soft;
  return {{"observation_space", {{"shape", {6}}, {"low", vec_json(-soft)}, {"high", vec_json(soft)}}},
          {"action_space",
           {{"shape", {3}}, {"low", vec_json(env.input_limits().u_min)}, {"high", vec_json(env.input_limits().u_max)}}},
          {"limits", limits_to_json(env.config())},
          {"steps_per_episode", env.config().steps_per_episode()}};
}

ProtocolHandler::ProtocolHandler(AppConfig defaults) : defaults_(std::move(defaults)) {}

std::string ProtocolHandler::handle_line(const std::string& line) {
  json response;
  try {
    const json request = json::parse(line);
    response = dispatch(request);
  } catch (const json::parse_error& e) {
    response = failure(std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    response = failure(e.what());
  }
  return response.dump();
}

ProtocolHandler::Session& ProtocolHandler::session(const json& request) {
  if (!request.contains("session") || !request["session"].is_string()) {
    throw Error(ErrorCode::kProtocol, "request needs a string 'session'");
  }
  const auto it = sessions_.find(request["session"].get<std::string>());
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kProtocol, "unknown session '" + request["session"].get<std::string>() + "'");
  }
  return it->second;
}

json ProtocolHandler::dispatch(const json& request) {
  if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
    throw Error(ErrorCode::kProtocol, "request must be an object with a string 'op'");
  }
  const std::string op = request["op"].get<std::string>();
  json payload = request.value("payload", json::object());
  if (!payload.is_object()) throw Error(ErrorCode::kProtocol, "'payload' must be an object");

  if (op == "make") {
    std::size_t num_envs = 1;
    if (payload.contains("num_envs")) {
      if (!payload["num_envs"].is_number_unsigned() || payload["num_envs"].get<std::uint64_t>() == 0) {
        throw Error(ErrorCode::kProtocol, "'num_envs' must be a positive integer");
      }
      num_envs = payload["num_envs"].get<std::size_t>();
      payload.erase("num_envs");
    }
    const EnvConfig cfg = parse_env_config(payload, defaults_.env);
    Session s;
    s.vectorized = num_envs > 1;
    for (std::size_t i = 0; i < num_envs; ++i) {
      EnvConfig sub = cfg;
      // Sub-environments get independent streams derived from the session seed.
      if (s.vectorized && cfg.seed) {
        sub.seed = derive_seed(*cfg.seed, i);
        sub.noise_seeds.reset();
      }
      s.envs.push_back(std::make_unique<Environment>(std::move(sub)));
    }
    const std::string id = "s" + std::to_string(g_next_session++);
    json out = space_description(*s.envs.front());
    out["session"] = id;
    out["num_envs"] = num_envs;
    sessions_.emplace(id, std::move(s));
    return ok(std::move(out));
  }
  if (op == "reset") {
    Session& s = session(request);
    if (payload.contains("seed")) {
      const std::uint64_t seed = parse_seed(payload);
      for (std::size_t i = 0; i < s.envs.size(); ++i) s.envs[i]->seed(s.vectorized ? derive_seed(seed, i) : seed);
    }
    if (!s.vectorized) return ok({{"observation", vec_json(s.envs.front()->reset())}});
    json observations = json::array();
    for (auto& env : s.envs) observations.push_back(vec_json(env->reset()));
    return ok({{"observations", std::move(observations)}});
  }
  if (op == "step") {
    Session& s = session(request);
    if (!s.vectorized) {
      const StepResult r = s.envs.front()->step(parse_action(payload.value("action", json())));
      return ok({{"observation", vec_json(r.observation)},
                 {"reward", r.reward},
                 {"done", r.done},
                 {"info", info_json(r.info)}});
    }
    const json& actions = payload.value("actions", json());
    if (!actions.is_array() || actions.size() != s.envs.size()) {
      throw Error(ErrorCode::kProtocol,
                  "vector step needs payload.actions with " + std::to_string(s.envs.size()) + " actions");
    }
    std::vector<TorqueInput> inputs;
    for (const json& a : actions) inputs.push_back(parse_action(a));
    for (std::size_t i = 0; i < s.envs.size(); ++i) {
      if (!s.envs[i]->done()) continue;
      throw Error(ErrorCode::kLifecycle, "environment " + std::to_string(i) + " is done; call reset");
    }
    json observations = json::array(), rewards = json::array(), dones = json::array(), infos = json::array();
    for (std::size_t i = 0; i < s.envs.size(); ++i) {
      const StepResult r = s.envs[i]->step(inputs[i]);
      observations.push_back(vec_json(r.observation));
      rewards.push_back(r.reward);
      dones.push_back(r.done);
      infos.push_back(info_json(r.info));
    }
    return ok({{"observations", std::move(observations)},
               {"rewards", std::move(rewards)},
               {"dones", std::move(dones)},
               {"infos", std::move(infos)}});
  }
  if (op == "close") {
    session(request);
    sessions_.erase(request["session"].get<std::string>());
    return ok({{"closed", request["session"]}});
  }
  if (op == "spec") {
    if (request.contains("session")) return ok(space_description(*session(request).envs.front()));
    return ok(space_description(Environment(defaults_.env)));
  }
  throw Error(ErrorCode::kProtocol, "unknown op '" + op + "' (expected make, reset, step, close or spec)");
}

void serve_stream(std::istream& in, std::ostream& out, const AppConfig& defaults) {
  ProtocolHandler handler(defaults);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << handler.handle_line(line) << '\n' << std::flush;
  }
}

TcpServer::TcpServer(AppConfig defaults, const std::string& host, int port) : defaults_(std::move(defaults)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kIo, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kInvalidArgument, "invalid IPv4 bind address '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 64) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  for (auto& t : handlers_) {
    if (t.joinable()) t.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    handlers_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(mutex_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::handle_connection(int fd) {
  ProtocolHandler handler(defaults_);
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    bool alive = true;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (!send_all(fd, handler.handle_line(line) + "\n")) {
        alive = false;
        break;
      }
    }
    if (!alive) break;
  }
  std::lock_guard lock(mutex_);
  client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
  ::close(fd);
}

}  // namespace quadsim
