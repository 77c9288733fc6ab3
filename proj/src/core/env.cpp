#include "env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace quadsim {

namespace {

void config_error(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kInvalidConfig, "config." + field + ": " + msg);
}

bool is_integer_ratio(double num, double den) {
  const double ratio = num / den;
  return std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio);
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

void EnvConfig::validate() const {
  if (!std::isfinite(episode_time) || episode_time <= 0.0) config_error("episode_time", "must be > 0");
  if (!std::isfinite(control_frequency) || control_frequency <= 0.0) {
    config_error("control_frequency", "must be > 0");
  }
  if (!std::isfinite(sim_frequency) || sim_frequency <= 0.0) config_error("sim_frequency", "must be > 0");
  if (!is_integer_ratio(sim_frequency, control_frequency) || sim_frequency < control_frequency) {
    config_error("sim_frequency", "must be an integer multiple of control_frequency");
  }
  if (!is_integer_ratio(episode_time * control_frequency, 1.0)) {
    config_error("episode_time", "must span a whole number of control periods");
  }
  if (!initial_state.allFinite()) config_error("initial_state", "must be finite");
  if (constant_reference && !constant_reference->allFinite()) {
    config_error("constant_reference", "must be finite");
  }
  if (input_limit_override &&
      (!input_limit_override->allFinite() || (input_limit_override->array() <= 0.0).any())) {
    config_error("input_limit_override", "entries must be finite and > 0");
  }
  for (const auto& [name, spec] : {std::pair{"process_noise", process_noise},
                                   std::pair{"measurement_noise", measurement_noise}}) {
    if (!std::isfinite(spec.mean)) config_error(name, "mean must be finite");
    if (!std::isfinite(spec.variance) || spec.variance < 0.0) config_error(name, "variance must be >= 0");
  }
  quad_params.validate();
  IntegratorConfig ic = integrator;
  ic.sim_frequency = sim_frequency;
  ic.validate();
}

int EnvConfig::substeps_per_control() const {
  return static_cast<int>(std::lround(sim_frequency / control_frequency));
}

int EnvConfig::steps_per_episode() const {
  return static_cast<int>(std::lround(episode_time * control_frequency));
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * kPi;
  double w = a - two_pi * std::floor((a + kPi) / two_pi);
  // Rounding near the seam can land exactly on +pi.
  if (w >= kPi) w -= two_pi;
  if (w < -kPi) w = -kPi;
  return w;
}

StateVector error_state(const StateVector& reference, const StateVector& state) {
  StateVector err = reference - state;
  for (int i : {kPhi, kTheta, kPsi}) err[i] = wrap_angle(err[i]);
  return err;
}

double compute_reward(const StateVector& x_err, const TorqueInput& u, const CostWeights& w) {
  const double cost = x_err.dot(w.q_diag.cwiseProduct(x_err)) + u.dot(w.r_diag.cwiseProduct(u));
  return -cost;
}

StateVector sample_reference(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  StateVector ref = StateVector::Zero();
  ref[kPhi] = angle(rng);
  ref[kTheta] = angle(rng);
  ref[kPsi] = angle(rng);
  return ref;
}

GaussianNoise::GaussianNoise(NoiseSpec spec, std::uint64_t seed)
    : rng_(seed), dist_(spec.mean, std::sqrt(spec.variance)) {}

void GaussianNoise::reseed(std::uint64_t seed) {
  rng_.seed(seed);
  dist_.reset();
}

double GaussianNoise::draw() { return dist_(rng_); }

StateVector GaussianNoise::draw_state() {
  StateVector v;
  for (int i = 0; i < 6; ++i) v[i] = draw();
  return v;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Environment::Environment(EnvConfig config)
    : config_((config.validate(), std::move(config))),
      process_noise_(config_.process_noise, 0),
      measurement_noise_(config_.measurement_noise, 0) {
  const QuadParams& p = config_.quad_params;
  input_limits_ = compute_input_limits(p);
  if (config_.input_limit_override) {
    input_limits_.u_max = *config_.input_limit_override;
    input_limits_.u_min = -input_limits_.u_max;
  }
  state_limits_.hard = compute_hard_state_limits(p, 0.0, config_.episode_time);
  state_limits_.soft = soft_state_limits(p);
  weights_.q_diag = state_limits_.soft.cwiseInverse();
  weights_.r_diag = input_limits_.u_max.cwiseInverse();

  linear_model_ = build_linear_model(p);
  if (config_.dynamics_kind == DynamicsKind::kLinear) {
    deriv_ = [model = linear_model_](const StateVector& x, const TorqueInput& u) {
      return linear_deriv(x, u, model);
    };
  } else {
    deriv_ = [p](const StateVector& x, const TorqueInput& u) { return nonlinear_deriv(x, u, p); };
  }
  config_.integrator.sim_frequency = config_.sim_frequency;
  substeps_ = config_.substeps_per_control();
  steps_per_episode_ = config_.steps_per_episode();

  const std::uint64_t master = config_.seed ? *config_.seed : entropy_seed();
  seed(master);
  if (config_.noise_seeds) {
    process_noise_.reseed(config_.noise_seeds->first);
    measurement_noise_.reseed(config_.noise_seeds->second);
  }
  set_state(config_.initial_state);
}

void Environment::seed(std::uint64_t seed) {
  reference_rng_.seed(derive_seed(seed, 0));
  process_noise_.reseed(derive_seed(seed, 1));
  measurement_noise_.reseed(derive_seed(seed, 2));
}

void Environment::set_state(const StateVector& state) {
  state_ = state;
  for (int i : {kPhi, kTheta, kPsi}) state_[i] = wrap_angle(state_[i]);
}

double Environment::time() const { return steps_ / config_.control_frequency; }

Observation Environment::reset() {
  reference_ = config_.constant_reference ? *config_.constant_reference : sample_reference(reference_rng_);
  // The plant keeps its state across episodes unless it has left the soft envelope.
  if ((state_.cwiseAbs().array() > state_limits_.soft.array()).any()) {
    set_state(config_.initial_state);
  }
  steps_ = 0;
  needs_reset_ = false;
  return observe(error_state(reference_, state_));
}

Observation Environment::observe(const StateVector& err) {
  StateVector obs = err;
  if (config_.stochastic) {
    obs += measurement_noise_.draw_state();
    for (int i : {kPhi, kTheta, kPsi}) obs[i] = wrap_angle(obs[i]);
  }
  for (int i : {kPhiDot, kThetaDot, kPsiDot}) {
    obs[i] = std::clamp(obs[i], -state_limits_.soft[i], state_limits_.soft[i]);
  }
  return obs;
}

StepResult Environment::step(const TorqueInput& action) {
  if (needs_reset_) {
    throw Error(ErrorCode::kLifecycle, "step called before reset; call reset first");
  }
  if (done()) {
    throw Error(ErrorCode::kLifecycle, "episode is done; call reset before stepping again");
  }
  if (!action.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "step: action must be finite");
  }

  StepResult result;
  StepInfo& info = result.info;
  info.clamped_action = action.cwiseMax(input_limits_.u_min).cwiseMin(input_limits_.u_max);

  const QuadParams& p = config_.quad_params;
  const MixResult mix = mix_torques_to_motors(info.clamped_action, p.m * p.g, p);
  info.realized_torque = mix.realized;
  info.motor_speeds = mix.speeds;
  info.saturated = mix.saturated;

  const double dt_sub = 1.0 / config_.sim_frequency;
  StateVector next =
      integrate_interval(deriv_, state_, mix.realized, substeps_, dt_sub, config_.integrator, time());
  if (config_.stochastic) next += process_noise_.draw_state();
  set_state(next);

  const StateVector err = error_state(reference_, state_);
  result.observation = observe(err);
  result.reward = compute_reward(err, mix.realized, weights_);

  ++steps_;
  result.done = done();
  info.state = state_;
  info.reference = reference_;
  info.time = time();
  return result;
}

}  // namespace quadsim
