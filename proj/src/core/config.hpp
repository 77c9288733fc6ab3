#pragma once

#include <string>

#include "controllers.hpp"
#include "env.hpp"
#include "json.hpp"
#include "metrics.hpp"

namespace quadsim {

/// Everything one config file can hold. Top-level keys are EnvConfig fields;
/// `quad_params`, `integrator`, `pid` and `metrics` are nested sections.
struct AppConfig {
  EnvConfig env;
  PidGains pid;
  MetricsConfig metrics;
};

/// Applies `j` on top of `base`. Absent keys keep their value; unknown keys
/// and wrongly typed values throw Error(kInvalidConfig) naming the key.
AppConfig parse_app_config(const nlohmann::json& j, AppConfig base = {});
EnvConfig parse_env_config(const nlohmann::json& j, EnvConfig base = {});

AppConfig load_app_config(const std::string& path);

nlohmann::json env_config_to_json(const EnvConfig& cfg);

/// Derived limits (w_min, input limits, hard/soft state limits) as JSON.
nlohmann::json limits_to_json(const EnvConfig& cfg);

}  // namespace quadsim
