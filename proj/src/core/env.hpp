#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "dynamics.hpp"
#include "integrator.hpp"

namespace quadsim {

enum class DynamicsKind { kLinear, kNonlinear };

struct NoiseSpec {
  double mean = 0.0;
  double variance = 0.01;
};

/// Environment configuration. Defaults reproduce the reference setup:
/// 5 s episodes, 250 Hz plant, 50 Hz control.
struct EnvConfig {
  double episode_time = 5.0;
  double sim_frequency = 250.0;
  double control_frequency = 50.0;
  StateVector initial_state = StateVector::Zero();
  std::optional<std::uint64_t> seed;
  std::optional<StateVector> constant_reference;
  std::optional<Eigen::Vector3d> input_limit_override;
  DynamicsKind dynamics_kind = DynamicsKind::kNonlinear;
  bool stochastic = false;
  NoiseSpec process_noise;
  NoiseSpec measurement_noise;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> noise_seeds;
  QuadParams quad_params;
  IntegratorConfig integrator;

  /// Throws Error(kInvalidConfig) naming the offending field.
  void validate() const;
  int substeps_per_control() const;
  int steps_per_episode() const;
};

/// Q = diag(1 / soft limits), R = diag(1 / u_max).
struct CostWeights {
  StateVector q_diag;
  Eigen::Vector3d r_diag;
};

using Observation = StateVector;

struct StepInfo {
  StateVector state;
  StateVector reference;
  TorqueInput clamped_action;
  TorqueInput realized_torque;
  MotorSpeeds motor_speeds;
  bool saturated = false;
  double time = 0.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

double wrap_angle(double a);

/// Error state wrap(ref - x) on angles, ref - x on rates.
StateVector error_state(const StateVector& reference, const StateVector& state);

double compute_reward(const StateVector& x_err, const TorqueInput& u, const CostWeights& w);

/// Angle entries uniform on [-pi, pi), rate entries zero.
StateVector sample_reference(std::mt19937_64& rng);

/// Seeded additive Gaussian noise, one independent draw per component.
class GaussianNoise {
 public:
  GaussianNoise(NoiseSpec spec, std::uint64_t seed);
  void reseed(std::uint64_t seed);
  double draw();
  StateVector draw_state();

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
};

/// Derives a sub-seed for an independent random stream from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// One episodic environment. Not thread-safe; independent instances are.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  Observation reset();
  StepResult step(const TorqueInput& action);
  void seed(std::uint64_t seed);

  const EnvConfig& config() const { return config_; }
  const InputLimits& input_limits() const { return input_limits_; }
  const StateLimits& state_limits() const { return state_limits_; }
  const CostWeights& cost_weights() const { return weights_; }
  const StateVector& state() const { return state_; }
  const StateVector& reference() const { return reference_; }
  double time() const;
  bool done() const { return steps_ >= steps_per_episode_; }

  /// Overwrites the plant state; angles are wrapped. Used by tests and tools.
  void set_state(const StateVector& state);

 private:
  Observation observe(const StateVector& err);

  EnvConfig config_;
  InputLimits input_limits_;
  StateLimits state_limits_;
  CostWeights weights_;
  LinearModel linear_model_;
  Derivative deriv_;
  int substeps_;
  int steps_per_episode_;

  std::mt19937_64 reference_rng_;
  GaussianNoise process_noise_;
  GaussianNoise measurement_noise_;

  StateVector state_;
  StateVector reference_ = StateVector::Zero();
  int steps_ = 0;
  bool needs_reset_ = true;
};

}  // namespace quadsim
