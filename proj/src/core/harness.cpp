#include "harness.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace quadsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kControllerStream = 0x636f6e74726c;  // "contrl"

std::uint64_t controller_seed(std::uint64_t env_seed) { return derive_seed(env_seed, kControllerStream); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

const char* const kStateNames[6] = {"phi", "phi_dot", "theta", "theta_dot", "psi", "psi_dot"};

}  // namespace

Trajectory run_controlled_episode(Environment& env, Controller& controller) {
  const auto start = std::chrono::steady_clock::now();
  const double dt = 1.0 / env.config().control_frequency;
  Trajectory traj;
  const std::size_t n = static_cast<std::size_t>(env.config().steps_per_episode()) + 1;
  traj.time.reserve(n);
  traj.state.reserve(n);
  traj.observation.reserve(n);
  traj.action.reserve(n);
  traj.realized.reserve(n);
  traj.reward.reserve(n);

  controller.reset();
  Observation obs = env.reset();
  traj.reference = env.reference();
  traj.time.push_back(0.0);
  traj.state.push_back(env.state());
  traj.observation.push_back(obs);
  traj.action.push_back(TorqueInput::Zero());
  traj.realized.push_back(TorqueInput::Zero());
  traj.reward.push_back(0.0);

  bool done = false;
  while (!done) {
    const TorqueInput u = controller.act(obs, dt);
    StepResult r = env.step(u);
    obs = r.observation;
    done = r.done;
    traj.time.push_back(r.info.time);
    traj.state.push_back(r.info.state);
    traj.observation.push_back(r.observation);
    traj.action.push_back(r.info.clamped_action);
    traj.realized.push_back(r.info.realized_torque);
    traj.reward.push_back(r.reward);
  }
  traj.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

AppConfig with_concrete_seed(AppConfig cfg) {
  if (!cfg.env.seed) {
    std::random_device rd;
    cfg.env.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  return cfg;
}

AppConfig step_reference_config(AppConfig cfg, Axis axis, double amplitude) {
  StateVector ref = StateVector::Zero();
  ref[axis_state_index(axis)] = amplitude;
  cfg.env.constant_reference = ref;
  cfg.env.initial_state = StateVector::Zero();
  return cfg;
}

EpisodeReport run_episode(const AppConfig& base, const std::string& controller, Axis axis,
                          std::optional<double> step_amplitude) {
  AppConfig cfg = with_concrete_seed(base);
  if (step_amplitude) cfg = step_reference_config(cfg, axis, *step_amplitude);
  Environment env(cfg.env);
  auto ctrl = make_controller(controller, cfg.pid, env.input_limits(), controller_seed(*cfg.env.seed));

  EpisodeReport report;
  report.controller = controller;
  report.axis = axis;
  report.seed = *cfg.env.seed;
  report.trajectory = run_controlled_episode(env, *ctrl);
  const int idx = axis_state_index(axis);
  report.step_ref = report.trajectory.reference[idx] - report.trajectory.state.front()[idx];
  if (report.step_ref != 0.0) {
    report.metrics = compute_metrics(report.trajectory, axis, report.step_ref, cfg.metrics);
  }
  return report;
}

ComparisonReport compare_controllers(const AppConfig& base, const std::vector<std::string>& controllers, Axis axis,
                                     double step_amplitude) {
  if (controllers.empty()) throw Error(ErrorCode::kInvalidArgument, "compare: no controllers given");
  if (step_amplitude == 0.0) throw Error(ErrorCode::kInvalidArgument, "compare: step amplitude must be nonzero");
  const AppConfig cfg = with_concrete_seed(base);
  ComparisonReport report;
  for (const auto& name : controllers) {
    EpisodeReport ep = run_episode(cfg, name, axis, step_amplitude);
    report.rows.emplace_back(name, *ep.metrics);
    report.episodes.push_back(std::move(ep));
  }
  return report;
}

BatchReport run_batch(const AppConfig& base, const BatchOptions& opts) {
  if (opts.n_envs < 1) throw Error(ErrorCode::kInvalidArgument, "batch: n_envs must be >= 1");
  if (opts.episodes_per_env < 1) throw Error(ErrorCode::kInvalidArgument, "batch: episodes must be >= 1");
  if (opts.workers < 1) throw Error(ErrorCode::kInvalidArgument, "batch: workers must be >= 1");
  const AppConfig cfg = with_concrete_seed(base);

  BatchReport report;
  report.master_seed = *cfg.env.seed;
  report.workers = opts.workers;
  const auto n = static_cast<std::size_t>(opts.n_envs);
  report.env_seeds.resize(n);
  report.episode_rewards.assign(n, {});
  report.env_wall_clock_s.assign(n, 0.0);
  std::vector<long long> steps(n, 0);
  for (std::size_t i = 0; i < n; ++i) report.env_seeds[i] = derive_seed(report.master_seed, i);
  // Validate the controller name before spinning up workers.
  make_controller(opts.controller, cfg.pid, compute_input_limits(cfg.env.quad_params), 0);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex failure_mutex;
  std::optional<std::pair<std::size_t, std::string>> failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < n && !abort; i = next++) {
      try {
        EnvConfig env_cfg = cfg.env;
        env_cfg.seed = report.env_seeds[i];
        env_cfg.noise_seeds.reset();
        Environment env(env_cfg);
        auto ctrl = make_controller(opts.controller, cfg.pid, env.input_limits(), controller_seed(*env_cfg.seed));
        const auto start = std::chrono::steady_clock::now();
        for (int e = 0; e < opts.episodes_per_env; ++e) {
          const Trajectory traj = run_controlled_episode(env, *ctrl);
          report.episode_rewards[i].push_back(std::accumulate(traj.reward.begin(), traj.reward.end(), 0.0));
          steps[i] += static_cast<long long>(traj.size()) - 1;
        }
        report.env_wall_clock_s[i] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure || i < failure->first) failure = std::pair{i, std::string(e.what())};
        abort = true;
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  {
    std::vector<std::jthread> pool;
    const int count = std::min<int>(opts.workers, opts.n_envs);
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
  }
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (failure) {
    throw Error(ErrorCode::kIntegrationFailure, "batch aborted: env " + std::to_string(failure->first) +
                                                    " (seed " + std::to_string(report.env_seeds[failure->first]) +
                                                    ") failed: " + failure->second);
  }
  report.total_steps = std::accumulate(steps.begin(), steps.end(), 0LL);
  report.steps_per_second = report.wall_clock_s > 0.0 ? report.total_steps / report.wall_clock_s : 0.0;
  return report;
}

json write_episode_artifacts(const EpisodeReport& report, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  {
    std::ofstream out(dir / "trajectory.csv");
    if (!out) throw Error(ErrorCode::kIo, "cannot write trajectory.csv in '" + out_dir + "'");
    write_trajectory_csv(out, report.trajectory);
  }
  const auto& traj = report.trajectory;
  json summary = {
      {"controller", report.controller},
      {"seed", report.seed},
      {"axis", axis_name(report.axis)},
      {"step_ref", report.step_ref},
      {"reference", std::vector<double>(traj.reference.data(), traj.reference.data() + 6)},
      {"steps", traj.size() - 1},
      {"total_reward", std::accumulate(traj.reward.begin(), traj.reward.end(), 0.0)},
      {"computation_time", traj.wall_clock_s},
      {"metrics", report.metrics ? json::parse(metrics_json(*report.metrics)) : json(nullptr)},
      {"trajectory_csv", (dir / "trajectory.csv").string()},
  };
  write_file(dir / "metrics.json", summary.dump(2) + "\n");
  return summary;
}

json write_comparison_artifacts(const ComparisonReport& report, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  json files = json::array();
  for (const auto& ep : report.episodes) {
    const fs::path path = dir / (ep.controller + "_trajectory.csv");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    write_trajectory_csv(out, ep.trajectory);
    files.push_back(path.string());
  }
  write_file(dir / "comparison.csv", metrics_table_csv(report.rows));
  write_file(dir / "comparison.json", metrics_table_json(report.rows) + "\n");
  write_file(dir / "comparison.txt", metrics_table_text(report.rows));
  files.push_back((dir / "comparison.csv").string());
  files.push_back((dir / "comparison.json").string());
  files.push_back((dir / "comparison.txt").string());

  // One file per state: t followed by one column per controller.
  const auto& first = report.episodes.front().trajectory;
  for (int s = 0; s < 6; ++s) {
    std::ostringstream out;
    out << std::setprecision(17) << 't';
    for (const auto& ep : report.episodes) out << ',' << ep.controller;
    out << '\n';
    for (std::size_t i = 0; i < first.size(); ++i) {
      out << first.time[i];
      for (const auto& ep : report.episodes) out << ',' << ep.trajectory.state[i][s];
      out << '\n';
    }
    const fs::path path = dir / (std::string("plot_") + kStateNames[s] + ".csv");
    write_file(path, out.str());
    files.push_back(path.string());
  }

  json table = json::parse(metrics_table_json(report.rows));
  table["seed"] = report.episodes.front().seed;
  table["axis"] = axis_name(report.episodes.front().axis);
  table["step_ref"] = report.episodes.front().step_ref;
  table["files"] = files;
  return table;
}

json batch_report_json(const BatchReport& r) {
  json per_episode = json::array();
  for (std::size_t i = 0; i < r.episode_rewards.size(); ++i) {
    for (std::size_t e = 0; e < r.episode_rewards[i].size(); ++e) {
      per_episode.push_back({{"env", i}, {"episode", e}, {"seed", r.env_seeds[i]},
                             {"total_reward", r.episode_rewards[i][e]}});
    }
  }
  return {{"master_seed", r.master_seed},
          {"workers", r.workers},
          {"n_envs", r.episode_rewards.size()},
          {"episodes", per_episode},
          {"env_wall_clock_s", r.env_wall_clock_s},
          {"wall_clock_s", r.wall_clock_s},
          {"total_steps", r.total_steps},
          {"steps_per_second", r.steps_per_second}};
}

json write_batch_artifacts(const BatchReport& report, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  json j = batch_report_json(report);
  write_file(dir / "batch.json", j.dump(2) + "\n");
  std::ostringstream csv;
  csv << std::setprecision(17) << "env,episode,seed,total_reward\n";
  for (std::size_t i = 0; i < report.episode_rewards.size(); ++i) {
    for (std::size_t e = 0; e < report.episode_rewards[i].size(); ++e) {
      csv << i << ',' << e << ',' << report.env_seeds[i] << ',' << report.episode_rewards[i][e] << '\n';
    }
  }
  write_file(dir / "batch_rewards.csv", csv.str());
  j["files"] = {(dir / "batch.json").string(), (dir / "batch_rewards.csv").string()};
  return j;
}

std::string limits_report_text(const EnvConfig& cfg) {
  const json j = limits_to_json(cfg);
  std::ostringstream out;
  out << std::setprecision(6);
  auto vec = [&](const char* key) {
    std::ostringstream v;
    v << std::setprecision(6) << '[';
    bool first = true;
    for (double x : j[key]) {
      v << (first ? "" : ", ") << x;
      first = false;
    }
    v << ']';
    return v.str();
  };
  out << "w_min (rad/s)          " << j["w_min"].get<double>() << '\n'
      << "w_max (rad/s)          " << j["w_max"].get<double>() << '\n'
      << "U_max (N*m)            " << vec("u_max") << '\n'
      << "U_min (N*m)            " << vec("u_min") << '\n'
      << "hard state limits      " << vec("hard_state_limits") << '\n'
      << "soft state limits      " << vec("soft_state_limits") << '\n'
      << "steps per episode      " << j["steps_per_episode"].get<int>() << '\n';
  return out.str();
}

}  // namespace quadsim
