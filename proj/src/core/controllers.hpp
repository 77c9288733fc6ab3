#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "dynamics.hpp"
#include "env.hpp"

namespace quadsim {

class Controller {
 public:
  virtual ~Controller() = default;
  /// Maps an error observation to a torque command. Throws on non-finite input.
  virtual TorqueInput act(const Observation& observation, double dt) = 0;
  /// Clears integral/derivative memory. Random streams keep their position.
  virtual void reset() = 0;
  virtual std::string name() const = 0;
};

/// Parallel-form PID per axis: u = kp*e + ki*integral(e) + kd*e_dot.
///
/// `e` is the angle error and `e_dot` the rate error, both read straight off
/// the observation. The integral accumulator is clamped to
/// +-integral_clamp, so the integral contribution never exceeds
/// ki*integral_clamp.
struct PidGains {
  Eigen::Vector3d kp{1.0, 1.0, 0.2};
  Eigen::Vector3d ki{0.05, 0.05, 0.01};
  Eigen::Vector3d kd{0.15, 0.15, 0.1};
  Eigen::Vector3d integral_clamp{1.0, 1.0, 1.0};

  void validate() const;
};

class PidController final : public Controller {
 public:
  PidController(PidGains gains, InputLimits limits);
  TorqueInput act(const Observation& observation, double dt) override;
  void reset() override;
  std::string name() const override { return "pid"; }
  const Eigen::Vector3d& integral() const { return integral_; }

 private:
  PidGains gains_;
  InputLimits limits_;
  Eigen::Vector3d integral_ = Eigen::Vector3d::Zero();
};

class ZeroController final : public Controller {
 public:
  TorqueInput act(const Observation& observation, double dt) override;
  void reset() override {}
  std::string name() const override { return "zero"; }
};

class RandomController final : public Controller {
 public:
  RandomController(InputLimits limits, std::uint64_t seed);
  TorqueInput act(const Observation& observation, double dt) override;
  void reset() override {}
  std::string name() const override { return "random"; }

 private:
  InputLimits limits_;
  std::mt19937_64 rng_;
};

/// Builds "pid", "zero" or "random"; anything else is an invalid-argument error.
std::unique_ptr<Controller> make_controller(const std::string& kind, const PidGains& gains,
                                            const InputLimits& limits, std::uint64_t seed);

}  // namespace quadsim
