#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "controllers.hpp"
#include "env.hpp"
#include "metrics.hpp"

namespace quadsim {

/// Resets `env` and `controller`, then steps until done, logging every step.
Trajectory run_controlled_episode(Environment& env, Controller& controller);

struct EpisodeReport {
  std::string controller;
  Trajectory trajectory;
  std::optional<StepResponseMetrics> metrics;  // absent when the reference on `axis` is zero
  Axis axis = Axis::kRoll;
  double step_ref = 0.0;
  std::uint64_t seed = 0;
};

/// One episode from `cfg`. When `step_amplitude` is set the reference is a
/// constant step of that size on `axis` from rest.
EpisodeReport run_episode(const AppConfig& cfg, const std::string& controller, Axis axis,
                          std::optional<double> step_amplitude);

/// Fills in a master seed when the config leaves it unset.
AppConfig with_concrete_seed(AppConfig cfg);

/// Step-reference config: constant reference `amplitude` on `axis`, rest start.
AppConfig step_reference_config(AppConfig cfg, Axis axis, double amplitude);

struct ComparisonReport {
  std::vector<EpisodeReport> episodes;
  std::vector<MetricsRow> rows;
};

/// Runs every controller on an identical seeded step-reference episode.
ComparisonReport compare_controllers(const AppConfig& cfg, const std::vector<std::string>& controllers, Axis axis,
                                     double step_amplitude);

struct BatchOptions {
  int n_envs = 8;
  int episodes_per_env = 1;
  int workers = 1;
  std::string controller = "pid";
};

struct BatchReport {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> env_seeds;
  /// Indexed [env][episode]; identical for any worker count.
  std::vector<std::vector<double>> episode_rewards;
  std::vector<double> env_wall_clock_s;
  double wall_clock_s = 0.0;
  long long total_steps = 0;
  double steps_per_second = 0.0;
  int workers = 1;
};

/// Runs n_envs independent environments on a worker pool. Env i uses seed
/// derive_seed(master, i); results are gathered by env index.
BatchReport run_batch(const AppConfig& cfg, const BatchOptions& opts);

/// Writes trajectory.csv and metrics.json into `out_dir`; returns the JSON summary.
nlohmann::json write_episode_artifacts(const EpisodeReport& report, const std::string& out_dir);

/// Writes per-controller trajectories, comparison tables and plot data.
nlohmann::json write_comparison_artifacts(const ComparisonReport& report, const std::string& out_dir);

nlohmann::json batch_report_json(const BatchReport& report);

/// Writes batch.json and batch_rewards.csv into `out_dir`; returns the report JSON.
nlohmann::json write_batch_artifacts(const BatchReport& report, const std::string& out_dir);

std::string limits_report_text(const EnvConfig& cfg);

}  // namespace quadsim
