#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <sstream>
#include <thread>

#include "doctest.h"
#include "env.hpp"
#include "server.hpp"

using namespace quadsim;
using nlohmann::json;

namespace {

json call(ProtocolHandler& h, const json& request) { return json::parse(h.handle_line(request.dump())); }

std::string make_session(ProtocolHandler& h, json payload = json::object()) {
  const json r = call(h, {{"op", "make"}, {"payload", payload}});
  REQUIRE(r["ok"] == true);
  return r["payload"]["session"].get<std::string>();
}

json step(ProtocolHandler& h, const std::string& s, const TorqueInput& u) {
  return call(h, {{"op", "step"}, {"session", s}, {"payload", {{"action", {u[0], u[1], u[2]}}}}});
}

StateVector to_state(const json& j) {
  StateVector v;
  for (int i = 0; i < 6; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  }
  ~Client() { ::close(fd_); }

  json request(const std::string& line) {
    const std::string msg = line + "\n";
    REQUIRE(::send(fd_, msg.data(), msg.size(), 0) == static_cast<ssize_t>(msg.size()));
    std::size_t pos;
    while ((pos = buffer_.find('\n')) == std::string::npos) {
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      REQUIRE(n > 0);
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    const std::string reply = buffer_.substr(0, pos);
    buffer_.erase(0, pos + 1);
    return json::parse(reply);
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace

TEST_CASE("make with defaults describes the spaces") {
  ProtocolHandler h(AppConfig{});
  const json r = call(h, {{"op", "make"}, {"payload", json::object()}});
  REQUIRE(r["ok"] == true);
  const json& p = r["payload"];
  CHECK(p["session"].is_string());
  CHECK(p["action_space"]["shape"] == json::array({3}));
  CHECK(p["observation_space"]["shape"] == json::array({6}));
  CHECK(p["action_space"]["high"][0].get<double>() == doctest::Approx(1.256797508120159));
  CHECK(p["observation_space"]["high"][1].get<double>() == 35.0);
  CHECK(p["steps_per_episode"] == 250);
  CHECK(h.session_count() == 1);
}

TEST_CASE("zero action at rest with zero reference") {
  ProtocolHandler h(AppConfig{});
  const std::string s = make_session(h, {{"constant_reference", {0, 0, 0, 0, 0, 0}}});
  const json reset = call(h, {{"op", "reset"}, {"session", s}});
  CHECK(reset["payload"]["observation"] == json::array({0.0, 0.0, 0.0, 0.0, 0.0, 0.0}));
  const json r = step(h, s, TorqueInput::Zero());
  REQUIRE(r["ok"] == true);
  CHECK(r["payload"]["observation"] == json::array({0.0, 0.0, 0.0, 0.0, 0.0, 0.0}));
  CHECK(r["payload"]["reward"].get<double>() == 0.0);
  CHECK(r["payload"]["done"] == false);
  CHECK(r["payload"]["info"]["motor_speeds"].size() == 4);
}

TEST_CASE("episode end and lifecycle errors") {
  ProtocolHandler h(AppConfig{});
  const std::string s = make_session(h, {{"seed", 4}});
  const json before = step(h, s, TorqueInput::Zero());
  CHECK(before["ok"] == false);
  call(h, {{"op", "reset"}, {"session", s}});
  json last;
  for (int i = 0; i < 250; ++i) {
    last = step(h, s, TorqueInput(0.1, 0, 0));
    REQUIRE(last["ok"] == true);
    if (i < 249) CHECK(last["payload"]["done"] == false);
  }
  CHECK(last["payload"]["done"] == true);
  const json after = step(h, s, TorqueInput::Zero());
  CHECK(after["ok"] == false);
  CHECK(after["error"].get<std::string>().find("reset") != std::string::npos);
}

TEST_CASE("malformed requests keep the handler alive") {
  ProtocolHandler h(AppConfig{});
  json r = json::parse(h.handle_line("{not json"));
  CHECK(r["ok"] == false);
  CHECK(r["error"].get<std::string>().find("malformed") != std::string::npos);
  r = call(h, {{"op", "step"}, {"session", "nope"}, {"payload", {{"action", {0, 0, 0}}}}});
  CHECK(r["ok"] == false);
  CHECK(r["error"].get<std::string>().find("unknown session") != std::string::npos);
  r = call(h, {{"op", "fly"}});
  CHECK(r["ok"] == false);
  r = call(h, {{"op", "make"}, {"payload", {{"episode_tim", 3}}}});
  CHECK(r["ok"] == false);
  CHECK(r["error"].get<std::string>().find("episode_tim") != std::string::npos);
  const std::string s = make_session(h);
  call(h, {{"op", "reset"}, {"session", s}});
  r = call(h, {{"op", "step"}, {"session", s}, {"payload", {{"action", {0, 0}}}}});
  CHECK(r["ok"] == false);
  r = call(h, {{"op", "spec"}});
  CHECK(r["ok"] == true);
  CHECK(r["payload"]["limits"]["w_min"].get<double>() == doctest::Approx(323.88759212992886));
  r = call(h, {{"op", "close"}, {"session", s}});
  CHECK(r["ok"] == true);
  CHECK(call(h, {{"op", "reset"}, {"session", s}})["ok"] == false);
}

TEST_CASE("protocol round trip equals in-process use") {
  ProtocolHandler h(AppConfig{});
  EnvConfig cfg;
  cfg.seed = 31;
  cfg.stochastic = true;
  const std::string s = make_session(h, {{"seed", 31}, {"stochastic", true}});
  Environment local(cfg);
  for (int ep = 0; ep < 2; ++ep) {
    const json reset = call(h, {{"op", "reset"}, {"session", s}});
    CHECK(to_state(reset["payload"]["observation"]) == local.reset());
    for (int i = 0; i < 250; ++i) {
      const TorqueInput u(0.3 * std::sin(i * 0.1), -0.2, 0.05);
      const json r = step(h, s, u);
      const StepResult expected = local.step(u);
      CHECK(to_state(r["payload"]["observation"]) == expected.observation);
      CHECK(r["payload"]["reward"].get<double>() == expected.reward);
      CHECK(r["payload"]["done"].get<bool>() == expected.done);
    }
  }
}

TEST_CASE("interleaved sessions are isolated") {
  ProtocolHandler solo_a(AppConfig{}), solo_b(AppConfig{}), shared(AppConfig{});
  const json pa = {{"seed", 1}, {"stochastic", true}};
  const json pb = {{"seed", 2}};
  const std::string a1 = make_session(solo_a, pa), b1 = make_session(solo_b, pb);
  const std::string a2 = make_session(shared, pa), b2 = make_session(shared, pb);
  CHECK(a2 != b2);
  for (auto [h, s] : {std::pair{&solo_a, a1}, {&solo_b, b1}, {&shared, a2}, {&shared, b2}}) {
    call(*h, {{"op", "reset"}, {"session", s}});
  }
  for (int i = 0; i < 50; ++i) {
    const TorqueInput u(0.1, 0.2, -0.05);
    CHECK(step(shared, a2, u)["payload"] == step(solo_a, a1, u)["payload"]);
    CHECK(step(shared, b2, u)["payload"] == step(solo_b, b1, u)["payload"]);
  }
}

TEST_CASE("reset can reseed a session") {
  ProtocolHandler h(AppConfig{});
  const std::string s = make_session(h);
  const json r1 = call(h, {{"op", "reset"}, {"session", s}, {"payload", {{"seed", 8}}}});
  call(h, {{"op", "reset"}, {"session", s}});
  const json r2 = call(h, {{"op", "reset"}, {"session", s}, {"payload", {{"seed", 8}}}});
  CHECK(r1["payload"] == r2["payload"]);
}

TEST_CASE("vector session steps each sub-environment like a standalone one") {
  ProtocolHandler h(AppConfig{});
  const json made = call(h, {{"op", "make"}, {"payload", {{"seed", 77}, {"stochastic", true}, {"num_envs", 3}}}});
  REQUIRE(made["ok"] == true);
  CHECK(made["payload"]["num_envs"] == 3);
  CHECK(made["payload"]["action_space"]["shape"] == json::array({3}));
  const std::string s = made["payload"]["session"];

  std::vector<Environment> locals;
  for (std::uint64_t i = 0; i < 3; ++i) {
    EnvConfig cfg;
    cfg.seed = derive_seed(77, i);
    cfg.stochastic = true;
    locals.emplace_back(cfg);
  }
  const json reset = call(h, {{"op", "reset"}, {"session", s}});
  REQUIRE(reset["payload"]["observations"].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(to_state(reset["payload"]["observations"][i]) == locals[i].reset());
  CHECK(reset["payload"]["observations"][0] != reset["payload"]["observations"][1]);

  for (int t = 0; t < 250; ++t) {
    json actions = json::array();
    for (int i = 0; i < 3; ++i) actions.push_back({0.1 * i, -0.05 * t / 250.0, 0.01});
    const json r = call(h, {{"op", "step"}, {"session", s}, {"payload", {{"actions", actions}}}});
    REQUIRE(r["ok"] == true);
    for (std::size_t i = 0; i < 3; ++i) {
      const StepResult e = locals[i].step(TorqueInput(0.1 * i, -0.05 * t / 250.0, 0.01));
      CHECK(to_state(r["payload"]["observations"][i]) == e.observation);
      CHECK(r["payload"]["rewards"][i].get<double>() == e.reward);
      CHECK(r["payload"]["dones"][i].get<bool>() == e.done);
      CHECK(to_state(r["payload"]["infos"][i]["state"]) == e.info.state);
    }
  }
  const json after = call(h, {{"op", "step"}, {"session", s}, {"payload", {{"actions", {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}}}});
  CHECK(after["ok"] == false);
  CHECK(after["error"].get<std::string>().find("reset") != std::string::npos);
}

TEST_CASE("vector session validation") {
  ProtocolHandler h(AppConfig{});
  CHECK(call(h, {{"op", "make"}, {"payload", {{"num_envs", 0}}}})["ok"] == false);
  CHECK(call(h, {{"op", "make"}, {"payload", {{"num_envs", -2}}}})["ok"] == false);
  const std::string s = make_session(h, {{"num_envs", 2}, {"seed", 5}});
  call(h, {{"op", "reset"}, {"session", s}});
  json r = call(h, {{"op", "step"}, {"session", s}, {"payload", {{"actions", {{0, 0, 0}}}}}});
  CHECK(r["ok"] == false);
  CHECK(r["error"].get<std::string>().find("2 actions") != std::string::npos);
  r = call(h, {{"op", "step"}, {"session", s}, {"payload", {{"actions", {{0, 0, 0}, {0, 0}}}}}});
  CHECK(r["ok"] == false);
  // Reseeding a vector session is reproducible.
  const json r1 = call(h, {{"op", "reset"}, {"session", s}, {"payload", {{"seed", 9}}}});
  call(h, {{"op", "reset"}, {"session", s}});
  const json r2 = call(h, {{"op", "reset"}, {"session", s}, {"payload", {{"seed", 9}}}});
  CHECK(r1["payload"] == r2["payload"]);
}

TEST_CASE("stdio transport") {
  std::istringstream in(
      "{\"op\":\"make\",\"payload\":{\"constant_reference\":[0,0,0,0,0,0]}}\n"
      "\n"
      "garbage\n"
      "{\"op\":\"spec\"}\n");
  std::ostringstream out;
  serve_stream(in, out, AppConfig{});
  std::istringstream lines(out.str());
  std::string line;
  std::vector<json> replies;
  while (std::getline(lines, line)) replies.push_back(json::parse(line));
  REQUIRE(replies.size() == 3);
  CHECK(replies[0]["ok"] == true);
  CHECK(replies[1]["ok"] == false);
  CHECK(replies[2]["ok"] == true);
}

TEST_CASE("tcp transport serves concurrent clients") {
  TcpServer server(AppConfig{}, "127.0.0.1", 0);
  REQUIRE(server.port() > 0);
  std::thread loop([&] { server.run(); });
  {
    Client c1(server.port()), c2(server.port());
    const json m1 = c1.request(R"({"op":"make","payload":{"seed":3,"constant_reference":[0,0,0,0,0,0]}})");
    const json m2 = c2.request(R"({"op":"make","payload":{"seed":3}})");
    REQUIRE(m1["ok"] == true);
    REQUIRE(m2["ok"] == true);
    const std::string s1 = m1["payload"]["session"], s2 = m2["payload"]["session"];
    CHECK(c1.request(json({{"op", "reset"}, {"session", s1}}).dump())["ok"] == true);
    // Sessions are owned by their connection.
    CHECK(c2.request(json({{"op", "reset"}, {"session", s1}}).dump())["ok"] == false);
    CHECK(c2.request(json({{"op", "reset"}, {"session", s2}}).dump())["ok"] == true);
    CHECK(c1.request("{broken")["ok"] == false);
    const json r = c1.request(json({{"op", "step"}, {"session", s1}, {"payload", {{"action", {0, 0, 0}}}}}).dump());
    CHECK(r["payload"]["reward"].get<double>() == 0.0);
  }
  server.stop();
  loop.join();
}
