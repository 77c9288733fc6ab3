#include <cstdio>
#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "doctest.h"
#include "error.hpp"

using namespace quadsim;
using nlohmann::json;

TEST_CASE("empty config gives the reference defaults") {
  const AppConfig c = parse_app_config(json::object());
  CHECK(c.env.episode_time == 5.0);
  CHECK(c.env.sim_frequency == 250.0);
  CHECK(c.env.control_frequency == 50.0);
  CHECK(c.env.initial_state == StateVector::Zero());
  CHECK_FALSE(c.env.seed);
  CHECK_FALSE(c.env.constant_reference);
  CHECK_FALSE(c.env.input_limit_override);
  CHECK_FALSE(c.env.stochastic);
  CHECK(c.env.process_noise.mean == 0.0);
  CHECK(c.env.process_noise.variance == 0.01);
  CHECK(c.env.measurement_noise.variance == 0.01);
  CHECK_FALSE(c.env.noise_seeds);
  CHECK(c.env.quad_params.Ixx == 0.0213);
  CHECK(c.env.quad_params.w_max == 494.27);
  CHECK(c.env.quad_params.soft_rate_limits == Eigen::Vector3d(35, 35, 35));
}

TEST_CASE("shipped config file parses to the defaults") {
  const AppConfig c = load_app_config(QUADSIM_SOURCE_DIR "/config/default.json");
  const AppConfig d;
  CHECK(env_config_to_json(c.env) == env_config_to_json(d.env));
  CHECK(c.pid.kp == d.pid.kp);
  CHECK(c.pid.kd == d.pid.kd);
  CHECK(c.metrics.settling_band == d.metrics.settling_band);
}

TEST_CASE("fields override defaults") {
  const json j = json::parse(R"({
    "seed": 12, "dynamics_kind": "linear", "stochastic": true,
    "process_noise": [0.1, 0.02], "measurement_noise": {"variance": 0.5},
    "noise_seeds": [3, 4], "constant_reference": [1, 0, 0, 0, 0, 0],
    "input_limit_override": [0.5, 0.5, 0.1],
    "quad_params": {"Ixx": 0.03, "soft_rate_limits": [20, 20, 10]},
    "integrator": {"rel_tol": 1e-9},
    "pid": {"kp": [2, 2, 1]}, "metrics": {"settling_band": 0.05}
  })");
  const AppConfig c = parse_app_config(j);
  CHECK(*c.env.seed == 12);
  CHECK(c.env.dynamics_kind == DynamicsKind::kLinear);
  CHECK(c.env.stochastic);
  CHECK(c.env.process_noise.mean == 0.1);
  CHECK(c.env.process_noise.variance == 0.02);
  CHECK(c.env.measurement_noise.mean == 0.0);
  CHECK(c.env.measurement_noise.variance == 0.5);
  CHECK(c.env.noise_seeds->second == 4);
  CHECK((*c.env.constant_reference)[0] == 1.0);
  CHECK(c.env.quad_params.Ixx == 0.03);
  CHECK(c.env.quad_params.Iyy == 0.02217);
  CHECK(c.env.quad_params.soft_rate_limits[2] == 10.0);
  CHECK(c.env.integrator.rel_tol == 1e-9);
  CHECK(c.env.integrator.abs_tol == 1e-10);
  CHECK(c.pid.kp == Eigen::Vector3d(2, 2, 1));
  CHECK(c.metrics.settling_band == 0.05);

  // Round trip through the serializer.
  const EnvConfig again = parse_env_config(env_config_to_json(c.env));
  CHECK(env_config_to_json(again) == env_config_to_json(c.env));
}

TEST_CASE("unknown and malformed keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"episode_tim", 5}}), doctest::Contains("episode_tim"), Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"quad_params", {{"Ixy", 1}}}}), doctest::Contains("quad_params.Ixy"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"pid", {{"kq", {1, 1, 1}}}}}), doctest::Contains("pid.kq"), Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"initial_state", {1, 2}}}), doctest::Contains("initial_state"), Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"dynamics_kind", "quaternion"}}), doctest::Contains("dynamics_kind"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"seed", -3}}), doctest::Contains("seed"), Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"stochastic", 1}}), doctest::Contains("stochastic"), Error);
  CHECK_THROWS_WITH_AS(parse_app_config(json{{"quad_params", {{"w_max", 100.0}}}}), doctest::Contains("w_max"), Error);
  CHECK_THROWS_WITH_AS(parse_env_config(json{{"pid", json::object()}}), doctest::Contains("pid"), Error);
}

TEST_CASE("file errors") {
  CHECK_THROWS_AS(load_app_config("/nonexistent/quadsim.json"), Error);
  const auto path = std::filesystem::temp_directory_path() / "quadsim_bad_config.json";
  std::ofstream(path) << "{ \"seed\": ";
  try {
    load_app_config(path.string());
    FAIL("expected parse failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
  }
  std::filesystem::remove(path);
}

TEST_CASE("limits json") {
  const json j = limits_to_json(EnvConfig{});
  CHECK(j["w_min"].get<double>() == doctest::Approx(323.88759212992886));
  CHECK(j["u_max"][2].get<double>() == doctest::Approx(0.21448868172383018));
  CHECK(j["hard_state_limits"][1].get<double>() == doctest::Approx(295.0228892300843));
  CHECK(j["steps_per_episode"] == 250);
}
