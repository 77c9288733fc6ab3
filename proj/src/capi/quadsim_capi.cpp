#include "quadsim/quadsim.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "config.hpp"
#include "controllers.hpp"
#include "env.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "metrics.hpp"
#include "server.hpp"

struct quadsim_env {
  quadsim::Environment env;
};

struct quadsim_controller {
  std::unique_ptr<quadsim::Controller> impl;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

quadsim_status to_status(quadsim::ErrorCode code) {
  switch (code) {
    case quadsim::ErrorCode::kInvalidArgument: return QUADSIM_ERR_INVALID_ARGUMENT;
    case quadsim::ErrorCode::kInvalidParams: return QUADSIM_ERR_INVALID_PARAMS;
    case quadsim::ErrorCode::kInvalidConfig: return QUADSIM_ERR_INVALID_CONFIG;
    case quadsim::ErrorCode::kIntegrationFailure: return QUADSIM_ERR_INTEGRATION;
    case quadsim::ErrorCode::kLifecycle: return QUADSIM_ERR_LIFECYCLE;
    case quadsim::ErrorCode::kIo: return QUADSIM_ERR_IO;
    case quadsim::ErrorCode::kProtocol: return QUADSIM_ERR_PROTOCOL;
  }
  return QUADSIM_ERR_INTERNAL;
}

template <typename F>
quadsim_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return QUADSIM_OK;
  } catch (const quadsim::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return QUADSIM_ERR_INVALID_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QUADSIM_ERR_INTERNAL;
  }
}

void require(const void* ptr, const char* name) {
  if (ptr == nullptr) {
    throw quadsim::Error(quadsim::ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <int N>
void copy_out(const Eigen::Matrix<double, N, 1>& v, double* dst) {
  for (int i = 0; i < N; ++i) dst[i] = v[i];
}

// Config file (or defaults) with the CLI-level overrides applied.
quadsim::AppConfig resolve_config(const quadsim_options& o) {
  quadsim::AppConfig cfg = o.config_path ? quadsim::load_app_config(o.config_path) : quadsim::AppConfig{};
  json overrides = json::object();
  if (o.has_seed) overrides["seed"] = o.seed;
  if (o.dynamics) overrides["dynamics_kind"] = o.dynamics;
  if (o.stochastic) overrides["stochastic"] = true;
  if (!overrides.empty()) cfg = quadsim::parse_app_config(overrides, cfg);
  return cfg;
}

std::string out_dir_or_default(const quadsim_options& o) { return o.out_dir ? o.out_dir : "quadsim_out"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

extern "C" {

const char* quadsim_version(void) { return "1.0.0"; }

const char* quadsim_last_error(void) { return g_last_error.c_str(); }

void quadsim_string_free(char* s) { delete[] s; }

quadsim_status quadsim_env_create(const char* config_json, quadsim_env** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const json j = config_json ? json::parse(config_json) : json::object();
    *out = new quadsim_env{quadsim::Environment(quadsim::parse_env_config(j))};
  });
}

quadsim_status quadsim_env_create_from_file(const char* path, quadsim_env** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new quadsim_env{quadsim::Environment(quadsim::load_app_config(path).env)};
  });
}

void quadsim_env_destroy(quadsim_env* env) { delete env; }

quadsim_status quadsim_env_reset(quadsim_env* env, double observation[6]) {
  return guarded([&] {
    require(env, "env");
    require(observation, "observation");
    copy_out<6>(env->env.reset(), observation);
  });
}

quadsim_status quadsim_env_step(quadsim_env* env, const double action[3], quadsim_step_result* out) {
  return guarded([&] {
    require(env, "env");
    require(action, "action");
    require(out, "out");
    const quadsim::StepResult r = env->env.step(quadsim::TorqueInput(action[0], action[1], action[2]));
    copy_out<6>(r.observation, out->observation);
    out->reward = r.reward;
    out->done = r.done ? 1 : 0;
    copy_out<6>(r.info.state, out->state);
    copy_out<6>(r.info.reference, out->reference);
    copy_out<3>(r.info.clamped_action, out->clamped_action);
    copy_out<3>(r.info.realized_torque, out->realized_torque);
    copy_out<4>(r.info.motor_speeds, out->motor_speeds);
    out->saturated = r.info.saturated ? 1 : 0;
    out->time = r.info.time;
  });
}

quadsim_status quadsim_env_seed(quadsim_env* env, uint64_t seed) {
  return guarded([&] {
    require(env, "env");
    env->env.seed(seed);
  });
}

quadsim_status quadsim_env_limits(const quadsim_env* env, quadsim_limits* out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    const auto& cfg = env->env.config();
    out->w_min = cfg.quad_params.w_min();
    out->w_max = cfg.quad_params.w_max;
    copy_out<3>(env->env.input_limits().u_max, out->u_max);
    copy_out<3>(env->env.input_limits().u_min, out->u_min);
    copy_out<6>(env->env.state_limits().hard, out->hard);
    copy_out<6>(env->env.state_limits().soft, out->soft);
    out->steps_per_episode = cfg.steps_per_episode();
  });
}

quadsim_status quadsim_env_state(const quadsim_env* env, double state[6]) {
  return guarded([&] {
    require(env, "env");
    require(state, "state");
    copy_out<6>(env->env.state(), state);
  });
}

quadsim_status quadsim_controller_create(const char* kind, const char* pid_json, const quadsim_env* env,
                                         uint64_t seed, quadsim_controller** out) {
  return guarded([&] {
    require(kind, "kind");
    require(env, "env");
    require(out, "out");
    *out = nullptr;
    quadsim::AppConfig app;
    if (pid_json) app = quadsim::parse_app_config(json{{"pid", json::parse(pid_json)}});
    *out = new quadsim_controller{quadsim::make_controller(kind, app.pid, env->env.input_limits(), seed)};
  });
}

void quadsim_controller_destroy(quadsim_controller* controller) { delete controller; }

quadsim_status quadsim_controller_act(quadsim_controller* controller, const double observation[6], double dt,
                                      double action[3]) {
  return guarded([&] {
    require(controller, "controller");
    require(observation, "observation");
    require(action, "action");
    const quadsim::Observation obs = Eigen::Map<const quadsim::StateVector>(observation);
    copy_out<3>(controller->impl->act(obs, dt), action);
  });
}

quadsim_status quadsim_controller_reset(quadsim_controller* controller) {
  return guarded([&] {
    require(controller, "controller");
    controller->impl->reset();
  });
}

quadsim_status quadsim_step_metrics(const double* time, const double* response, size_t n, double step_ref,
                                    char** out_json) {
  return guarded([&] {
    require(time, "time");
    require(response, "response");
    require(out_json, "out_json");
    const quadsim::StepResponseMetrics m = quadsim::step_response_metrics(
        std::vector<double>(time, time + n), std::vector<double>(response, response + n), step_ref);
    *out_json = dup_string(quadsim::metrics_json(m));
  });
}

quadsim_status quadsim_run(const quadsim_options* opts, char** out_json) {
  return guarded([&] {
    require(opts, "opts");
    require(out_json, "out_json");
    const quadsim::AppConfig cfg = resolve_config(*opts);
    const quadsim::Axis axis = quadsim::parse_axis(opts->axis ? opts->axis : "roll");
    std::optional<double> amplitude;
    if (opts->has_step_amplitude) amplitude = opts->step_amplitude;
    const auto report = quadsim::run_episode(cfg, opts->controller ? opts->controller : "pid", axis, amplitude);
    *out_json = dup_string(quadsim::write_episode_artifacts(report, out_dir_or_default(*opts)).dump(2));
  });
}

quadsim_status quadsim_compare(const quadsim_options* opts, char** out_json) {
  return guarded([&] {
    require(opts, "opts");
    require(out_json, "out_json");
    const quadsim::AppConfig cfg = resolve_config(*opts);
    const quadsim::Axis axis = quadsim::parse_axis(opts->axis ? opts->axis : "roll");
    const double amplitude = opts->has_step_amplitude ? opts->step_amplitude : 1.0;
    const auto controllers = split_list(opts->controller ? opts->controller : "pid,zero,random");
    const auto report = quadsim::compare_controllers(cfg, controllers, axis, amplitude);
    json j = quadsim::write_comparison_artifacts(report, out_dir_or_default(*opts));
    j["table"] = quadsim::metrics_table_text(report.rows);
    *out_json = dup_string(j.dump(2));
  });
}

quadsim_status quadsim_batch(const quadsim_options* opts, char** out_json) {
  return guarded([&] {
    require(opts, "opts");
    require(out_json, "out_json");
    const quadsim::AppConfig cfg = resolve_config(*opts);
    quadsim::BatchOptions b;
    if (opts->envs) b.n_envs = opts->envs;
    if (opts->episodes) b.episodes_per_env = opts->episodes;
    if (opts->workers) b.workers = opts->workers;
    if (opts->controller) b.controller = opts->controller;
    const auto report = quadsim::run_batch(cfg, b);
    const json j = opts->out_dir ? quadsim::write_batch_artifacts(report, opts->out_dir)
                                 : quadsim::batch_report_json(report);
    *out_json = dup_string(j.dump(2));
  });
}

quadsim_status quadsim_limits_report(const quadsim_options* opts, char** out_text) {
  return guarded([&] {
    require(opts, "opts");
    require(out_text, "out_text");
    *out_text = dup_string(quadsim::limits_report_text(resolve_config(*opts).env));
  });
}

quadsim_status quadsim_serve_tcp(const quadsim_options* opts, const char* host, int port) {
  return guarded([&] {
    require(opts, "opts");
    quadsim::TcpServer server(resolve_config(*opts), host ? host : "127.0.0.1", port);
    std::cerr << "quadsim: serving on " << (host ? host : "127.0.0.1") << ':' << server.port() << std::endl;
    server.run();
  });
}

quadsim_status quadsim_serve_stdio(const quadsim_options* opts) {
  return guarded([&] {
    require(opts, "opts");
    quadsim::serve_stream(std::cin, std::cout, resolve_config(*opts));
  });
}

}  // extern "C"
