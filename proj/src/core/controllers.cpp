#include "controllers.hpp"

#include "error.hpp"

namespace quadsim {

namespace {

void require_finite(const Observation& obs) {
  if (!obs.allFinite()) throw Error(ErrorCode::kInvalidArgument, "controller: observation must be finite");
}

}  // namespace

void PidGains::validate() const {
  if (!kp.allFinite() || !ki.allFinite() || !kd.allFinite()) {
    throw Error(ErrorCode::kInvalidConfig, "pid: gains must be finite");
  }
  if (!integral_clamp.allFinite() || (integral_clamp.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidConfig, "pid.integral_clamp: entries must be > 0");
  }
}

PidController::PidController(PidGains gains, InputLimits limits) : gains_(std::move(gains)), limits_(limits) {
  gains_.validate();
}

TorqueInput PidController::act(const Observation& observation, double dt) {
  require_finite(observation);
  const Eigen::Vector3d angle_err(observation[kPhi], observation[kTheta], observation[kPsi]);
  const Eigen::Vector3d rate_err(observation[kPhiDot], observation[kThetaDot], observation[kPsiDot]);
  integral_ = (integral_ + angle_err * dt).cwiseMax(-gains_.integral_clamp).cwiseMin(gains_.integral_clamp);
  const TorqueInput u = gains_.kp.cwiseProduct(angle_err) + gains_.ki.cwiseProduct(integral_) +
                        gains_.kd.cwiseProduct(rate_err);
  return u.cwiseMax(limits_.u_min).cwiseMin(limits_.u_max);
}

void PidController::reset() { integral_.setZero(); }

TorqueInput ZeroController::act(const Observation& observation, double) {
  require_finite(observation);
  return TorqueInput::Zero();
}

RandomController::RandomController(InputLimits limits, std::uint64_t seed) : limits_(limits), rng_(seed) {}

TorqueInput RandomController::act(const Observation& observation, double) {
  require_finite(observation);
  TorqueInput u;
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> dist(limits_.u_min[i], limits_.u_max[i]);
    u[i] = dist(rng_);
  }
  return u;
}

std::unique_ptr<Controller> make_controller(const std::string& kind, const PidGains& gains,
                                            const InputLimits& limits, std::uint64_t seed) {
  if (kind == "pid") return std::make_unique<PidController>(gains, limits);
  if (kind == "zero") return std::make_unique<ZeroController>();
  if (kind == "random") return std::make_unique<RandomController>(limits, seed);
  throw Error(ErrorCode::kInvalidArgument, "unknown controller '" + kind + "' (expected pid, zero or random)");
}

}  // namespace quadsim
