#include "config.hpp"

#include <fstream>
#include <set>

#include "error.hpp"

namespace quadsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': " + msg);
}

void reject_unknown(const json& j, const std::string& section, const std::set<std::string>& known) {
  if (!j.is_object()) fail(section.empty() ? "<root>" : section, "expected an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      fail(section.empty() ? item.key() : section + "." + item.key(), "unknown key");
    }
  }
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

std::uint64_t as_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    fail(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
    fail(key, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = as_double(v[static_cast<std::size_t>(i)], key);
  return out;
}

NoiseSpec as_noise(const json& v, const std::string& key) {
  NoiseSpec spec;
  if (v.is_array()) {
    const auto pair = as_vector<2>(v, key);
    spec.mean = pair[0];
    spec.variance = pair[1];
  } else {
    reject_unknown(v, key, {"mean", "variance"});
    if (v.contains("mean")) spec.mean = as_double(v["mean"], key + ".mean");
    if (v.contains("variance")) spec.variance = as_double(v["variance"], key + ".variance");
  }
  return spec;
}

QuadParams parse_quad_params(const json& j, QuadParams p) {
  reject_unknown(j, "quad_params", {"Ixx", "Iyy", "Izz", "m", "g", "d", "b", "k", "w_max", "soft_rate_limits"});
  const std::pair<const char*, double*> scalars[] = {{"Ixx", &p.Ixx}, {"Iyy", &p.Iyy}, {"Izz", &p.Izz},
                                                     {"m", &p.m},     {"g", &p.g},     {"d", &p.d},
                                                     {"b", &p.b},     {"k", &p.k},     {"w_max", &p.w_max}};
  for (const auto& [name, field] : scalars) {
    if (j.contains(name)) *field = as_double(j[name], std::string("quad_params.") + name);
  }
  if (j.contains("soft_rate_limits")) {
    p.soft_rate_limits = as_vector<3>(j["soft_rate_limits"], "quad_params.soft_rate_limits");
  }
  return p;
}

IntegratorConfig parse_integrator(const json& j, IntegratorConfig c) {
  reject_unknown(j, "integrator", {"rel_tol", "abs_tol", "max_internal_steps", "fixed_step"});
  if (j.contains("rel_tol")) c.rel_tol = as_double(j["rel_tol"], "integrator.rel_tol");
  if (j.contains("abs_tol")) c.abs_tol = as_double(j["abs_tol"], "integrator.abs_tol");
  if (j.contains("max_internal_steps")) {
    if (!j["max_internal_steps"].is_number_integer()) fail("integrator.max_internal_steps", "expected an integer");
    c.max_internal_steps = j["max_internal_steps"].get<int>();
  }
  if (j.contains("fixed_step")) {
    if (j["fixed_step"].is_null()) {
      c.fixed_step.reset();
    } else {
      c.fixed_step = as_double(j["fixed_step"], "integrator.fixed_step");
    }
  }
  return c;
}

PidGains parse_pid(const json& j, PidGains g) {
  reject_unknown(j, "pid", {"kp", "ki", "kd", "integral_clamp"});
  if (j.contains("kp")) g.kp = as_vector<3>(j["kp"], "pid.kp");
  if (j.contains("ki")) g.ki = as_vector<3>(j["ki"], "pid.ki");
  if (j.contains("kd")) g.kd = as_vector<3>(j["kd"], "pid.kd");
  if (j.contains("integral_clamp")) g.integral_clamp = as_vector<3>(j["integral_clamp"], "pid.integral_clamp");
  g.validate();
  return g;
}

MetricsConfig parse_metrics(const json& j, MetricsConfig m) {
  reject_unknown(j, "metrics", {"rise_low", "rise_high", "settling_band", "steady_state_window"});
  if (j.contains("rise_low")) m.rise_low = as_double(j["rise_low"], "metrics.rise_low");
  if (j.contains("rise_high")) m.rise_high = as_double(j["rise_high"], "metrics.rise_high");
  if (j.contains("settling_band")) m.settling_band = as_double(j["settling_band"], "metrics.settling_band");
  if (j.contains("steady_state_window")) {
    m.steady_state_window = as_double(j["steady_state_window"], "metrics.steady_state_window");
  }
  m.validate();
  return m;
}

const std::set<std::string> kEnvKeys = {
    "episode_time",  "sim_frequency",  "control_frequency", "initial_state",     "seed",
    "constant_reference", "input_limit_override", "dynamics_kind", "stochastic", "process_noise",
    "measurement_noise",  "noise_seeds",          "quad_params",   "integrator"};

void apply_env_keys(const json& j, EnvConfig& c) {
  if (j.contains("episode_time")) c.episode_time = as_double(j["episode_time"], "episode_time");
  if (j.contains("sim_frequency")) c.sim_frequency = as_double(j["sim_frequency"], "sim_frequency");
  if (j.contains("control_frequency")) c.control_frequency = as_double(j["control_frequency"], "control_frequency");
  if (j.contains("initial_state")) c.initial_state = as_vector<6>(j["initial_state"], "initial_state");
  if (j.contains("seed")) {
    if (j["seed"].is_null()) {
      c.seed.reset();
    } else {
      c.seed = as_seed(j["seed"], "seed");
    }
  }
  if (j.contains("constant_reference")) {
    if (j["constant_reference"].is_null()) {
      c.constant_reference.reset();
    } else {
      c.constant_reference = as_vector<6>(j["constant_reference"], "constant_reference");
    }
  }
  if (j.contains("input_limit_override")) {
    if (j["input_limit_override"].is_null()) {
      c.input_limit_override.reset();
    } else {
      c.input_limit_override = as_vector<3>(j["input_limit_override"], "input_limit_override");
    }
  }
  if (j.contains("dynamics_kind")) {
    const json& v = j["dynamics_kind"];
    if (v == "linear") {
      c.dynamics_kind = DynamicsKind::kLinear;
    } else if (v == "nonlinear") {
      c.dynamics_kind = DynamicsKind::kNonlinear;
    } else {
      fail("dynamics_kind", "expected \"linear\" or \"nonlinear\"");
    }
  }
  if (j.contains("stochastic")) {
    if (!j["stochastic"].is_boolean()) fail("stochastic", "expected a boolean");
    c.stochastic = j["stochastic"].get<bool>();
  }
  if (j.contains("process_noise")) c.process_noise = as_noise(j["process_noise"], "process_noise");
  if (j.contains("measurement_noise")) c.measurement_noise = as_noise(j["measurement_noise"], "measurement_noise");
  if (j.contains("noise_seeds")) {
    const json& v = j["noise_seeds"];
    if (v.is_null()) {
      c.noise_seeds.reset();
    } else {
      if (!v.is_array() || v.size() != 2) fail("noise_seeds", "expected [process_seed, measurement_seed]");
      c.noise_seeds = std::pair{as_seed(v[0], "noise_seeds"), as_seed(v[1], "noise_seeds")};
    }
  }
  if (j.contains("quad_params")) c.quad_params = parse_quad_params(j["quad_params"], c.quad_params);
  if (j.contains("integrator")) c.integrator = parse_integrator(j["integrator"], c.integrator);
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

EnvConfig parse_env_config(const json& j, EnvConfig base) {
  reject_unknown(j, "", kEnvKeys);
  apply_env_keys(j, base);
  base.validate();
  return base;
}

AppConfig parse_app_config(const json& j, AppConfig base) {
  std::set<std::string> known = kEnvKeys;
  known.insert({"pid", "metrics"});
  reject_unknown(j, "", known);
  apply_env_keys(j, base.env);
  if (j.contains("pid")) base.pid = parse_pid(j["pid"], base.pid);
  if (j.contains("metrics")) base.metrics = parse_metrics(j["metrics"], base.metrics);
  base.env.validate();
  return base;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_app_config(j);
}

json env_config_to_json(const EnvConfig& c) {
  const QuadParams& p = c.quad_params;
  json j = {
      {"episode_time", c.episode_time},
      {"sim_frequency", c.sim_frequency},
      {"control_frequency", c.control_frequency},
      {"initial_state", vec_json(c.initial_state)},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"constant_reference", c.constant_reference ? vec_json(*c.constant_reference) : json(nullptr)},
      {"input_limit_override", c.input_limit_override ? vec_json(*c.input_limit_override) : json(nullptr)},
      {"dynamics_kind", c.dynamics_kind == DynamicsKind::kLinear ? "linear" : "nonlinear"},
      {"stochastic", c.stochastic},
      {"process_noise", {{"mean", c.process_noise.mean}, {"variance", c.process_noise.variance}}},
      {"measurement_noise", {{"mean", c.measurement_noise.mean}, {"variance", c.measurement_noise.variance}}},
      {"noise_seeds", c.noise_seeds ? json::array({c.noise_seeds->first, c.noise_seeds->second}) : json(nullptr)},
      {"quad_params",
       {{"Ixx", p.Ixx}, {"Iyy", p.Iyy}, {"Izz", p.Izz}, {"m", p.m}, {"g", p.g}, {"d", p.d}, {"b", p.b},
        {"k", p.k}, {"w_max", p.w_max}, {"soft_rate_limits", vec_json(p.soft_rate_limits)}}},
      {"integrator",
       {{"rel_tol", c.integrator.rel_tol},
        {"abs_tol", c.integrator.abs_tol},
        {"max_internal_steps", c.integrator.max_internal_steps},
        {"fixed_step", c.integrator.fixed_step ? json(*c.integrator.fixed_step) : json(nullptr)}}},
  };
  return j;
}

json limits_to_json(const EnvConfig& cfg) {
  Environment env(cfg);
  const InputLimits& in = env.input_limits();
  const StateLimits& st = env.state_limits();
  return {
      {"w_min", cfg.quad_params.w_min()},
      {"w_max", cfg.quad_params.w_max},
      {"u_max", vec_json(in.u_max)},
      {"u_min", vec_json(in.u_min)},
      {"hard_state_limits", vec_json(st.hard)},
      {"soft_state_limits", vec_json(st.soft)},
      {"episode_time", cfg.episode_time},
      {"steps_per_episode", cfg.steps_per_episode()},
  };
}

}  // namespace quadsim
