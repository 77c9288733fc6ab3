// quadsim command-line front end. Talks to the engine only through the C API.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quadsim/quadsim.h"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "quadsim_out";
  std::string dynamics;
  bool stochastic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_out = true) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master random seed");
  cmd->add_option("--dynamics", f.dynamics, "plant model")->check(CLI::IsMember({"linear", "nonlinear"}));
  cmd->add_flag("--stochastic", f.stochastic, "enable process and measurement noise");
  if (with_out) cmd->add_option("--out", f.out, "output directory");
}

quadsim_options to_options(const CommonFlags& f) {
  quadsim_options o{};
  o.config_path = f.config.empty() ? nullptr : f.config.c_str();
  o.has_seed = f.seed.has_value();
  o.seed = f.seed.value_or(0);
  o.dynamics = f.dynamics.empty() ? nullptr : f.dynamics.c_str();
  o.stochastic = f.stochastic ? 1 : 0;
  o.out_dir = f.out.c_str();
  return o;
}

int report(quadsim_status status, char* text) {
  if (status != QUADSIM_OK) {
    std::cerr << "quadsim: error (" << static_cast<int>(status) << "): " << quadsim_last_error() << '\n';
    return 1;
  }
  if (text) {
    std::cout << text << '\n';
    quadsim_string_free(text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrotor attitude simulation and RL environment harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", quadsim_version());

  CommonFlags run_flags;
  std::string run_controller = "pid";
  std::string run_axis = "roll";
  std::optional<double> run_amplitude;
  auto* run = app.add_subcommand("run", "run one episode and write its trajectory and metrics");
  add_common(run, run_flags);
  run->add_option("--controller", run_controller)->check(CLI::IsMember({"pid", "zero", "random"}));
  run->add_option("--axis", run_axis)->check(CLI::IsMember({"roll", "pitch", "yaw"}));
  run->add_option("--step-amplitude", run_amplitude, "constant step reference on --axis (rad)");

  CommonFlags cmp_flags;
  std::vector<std::string> cmp_controllers;
  std::string cmp_axis = "roll";
  double cmp_amplitude = 1.0;
  auto* compare = app.add_subcommand("compare", "step-response comparison of several controllers");
  add_common(compare, cmp_flags);
  compare->add_option("--controller", cmp_controllers, "controllers to compare (default: pid zero random)")
      ->check(CLI::IsMember({"pid", "zero", "random"}));
  compare->add_option("--axis", cmp_axis)->check(CLI::IsMember({"roll", "pitch", "yaw"}));
  compare->add_option("--step-amplitude", cmp_amplitude, "step reference (rad)");

  CommonFlags batch_flags;
  int workers = 1;
  int episodes = 1;
  int envs = 8;
  std::string batch_controller = "pid";
  auto* batch = app.add_subcommand("batch", "run independent environments in parallel");
  add_common(batch, batch_flags);
  batch->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  batch->add_option("--episodes", episodes, "episodes per environment")->check(CLI::PositiveNumber);
  batch->add_option("--envs", envs, "number of environments")->check(CLI::PositiveNumber);
  batch->add_option("--controller", batch_controller)->check(CLI::IsMember({"pid", "zero", "random"}));

  CommonFlags limit_flags;
  auto* limits = app.add_subcommand("limits", "print derived motor, input and state limits");
  add_common(limits, limit_flags, false);

  CommonFlags serve_flags;
  int port = 5555;
  std::string host = "127.0.0.1";
  bool use_stdio = false;
  auto* serve = app.add_subcommand("serve", "serve environments over newline-delimited JSON");
  add_common(serve, serve_flags, false);
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "IPv4 bind address");
  serve->add_flag("--stdio", use_stdio, "speak the protocol on stdin/stdout instead of TCP");

  CLI11_PARSE(app, argc, argv);

  char* text = nullptr;
  if (*run) {
    quadsim_options o = to_options(run_flags);
    o.controller = run_controller.c_str();
    o.axis = run_axis.c_str();
    o.has_step_amplitude = run_amplitude.has_value();
    o.step_amplitude = run_amplitude.value_or(0.0);
    const quadsim_status status = quadsim_run(&o, &text);
    return report(status, text);
  }
  if (*compare) {
    quadsim_options o = to_options(cmp_flags);
    std::string list;
    for (const auto& c : cmp_controllers) list += (list.empty() ? "" : ",") + c;
    o.controller = list.empty() ? nullptr : list.c_str();
    o.axis = cmp_axis.c_str();
    o.has_step_amplitude = 1;
    o.step_amplitude = cmp_amplitude;
    const quadsim_status status = quadsim_compare(&o, &text);
    return report(status, text);
  }
  if (*batch) {
    quadsim_options o = to_options(batch_flags);
    o.workers = workers;
    o.episodes = episodes;
    o.envs = envs;
    o.controller = batch_controller.c_str();
    const quadsim_status status = quadsim_batch(&o, &text);
    return report(status, text);
  }
  if (*limits) {
    quadsim_options o = to_options(limit_flags);
    o.out_dir = nullptr;
    const quadsim_status status = quadsim_limits_report(&o, &text);
    return report(status, text);
  }
  quadsim_options o = to_options(serve_flags);
  o.out_dir = nullptr;
  const quadsim_status status = use_stdio ? quadsim_serve_stdio(&o) : quadsim_serve_tcp(&o, host.c_str(), port);
  return report(status, nullptr);
}
