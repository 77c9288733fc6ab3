#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace quadsim {

namespace {

void require_positive(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw Error(ErrorCode::kInvalidParams,
                std::string("quad_params.") + name + " must be finite and > 0, got " + std::to_string(value));
  }
}

}  // namespace

double QuadParams::w_min() const { return std::sqrt(m * g / (4.0 * b)); }

void QuadParams::validate() const {
  require_positive(Ixx, "Ixx");
  require_positive(Iyy, "Iyy");
  require_positive(Izz, "Izz");
  require_positive(m, "m");
  require_positive(g, "g");
  require_positive(d, "d");
  require_positive(b, "b");
  require_positive(k, "k");
  require_positive(w_max, "w_max");
  for (int i = 0; i < 3; ++i) require_positive(soft_rate_limits[i], "soft_rate_limits");
  if (!(w_min() < w_max)) {
    throw Error(ErrorCode::kInvalidParams, "quad_params: hover speed w_min = " + std::to_string(w_min()) +
                                               " rad/s must be below w_max = " + std::to_string(w_max));
  }
}

Matrix3 rotation_matrix(double phi, double theta, double psi) {
  if (!std::isfinite(phi) || !std::isfinite(theta) || !std::isfinite(psi)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation_matrix: angles must be finite");
  }
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Matrix3 r;
  r << cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf,
       sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf,
       -st,     ct * sf,                ct * cf;
  return r;
}

StateVector nonlinear_deriv(const StateVector& x, const TorqueInput& u, const QuadParams& p) {
  const double phi_dot = x[kPhiDot];
  const double theta_dot = x[kThetaDot];
  const double psi_dot = x[kPsiDot];
  StateVector dx;
  dx[kPhi] = phi_dot;
  dx[kPhiDot] = (p.Iyy - p.Izz) * theta_dot * psi_dot / p.Ixx + u[0] / p.Ixx;
  dx[kTheta] = theta_dot;
  dx[kThetaDot] = (p.Izz - p.Ixx) * phi_dot * psi_dot / p.Iyy + u[1] / p.Iyy;
  dx[kPsi] = psi_dot;
  dx[kPsiDot] = (p.Ixx - p.Iyy) * phi_dot * theta_dot / p.Izz + u[2] / p.Izz;
  return dx;
}

StateVector linear_deriv(const StateVector& x, const TorqueInput& u, const LinearModel& model) {
  return model.A * x + model.B * u;
}

LinearModel build_linear_model(const QuadParams& p) {
  LinearModel model;
  model.A.setZero();
  model.A(kPhi, kPhiDot) = 1.0;
  model.A(kTheta, kThetaDot) = 1.0;
  model.A(kPsi, kPsiDot) = 1.0;
  model.B.setZero();
  model.B(kPhiDot, 0) = 1.0 / p.Ixx;
  model.B(kThetaDot, 1) = 1.0 / p.Iyy;
  model.B(kPsiDot, 2) = 1.0 / p.Izz;
  model.C.setIdentity();
  model.D.setZero();
  return model;
}

InputLimits compute_input_limits(const QuadParams& p) {
  const double w_min = p.w_min();
  if (!(w_min < p.w_max)) {
    throw Error(ErrorCode::kInvalidParams, "compute_input_limits: w_min >= w_max");
  }
  const double span = p.w_max * p.w_max - w_min * w_min;
  InputLimits limits;
  // Yaw carries the factor 2k, roll/pitch only d*b.
  limits.u_max = TorqueInput(p.d * p.b * span, p.d * p.b * span, 2.0 * p.k * span);
  limits.u_min = -limits.u_max;
  return limits;
}

StateVector compute_hard_state_limits(const QuadParams& p, double t_start, double t_end) {
  const InputLimits limits = compute_input_limits(p);
  const double duration = t_end - t_start;
  StateVector hard;
  hard << kPi, limits.u_max[0] / p.Ixx * duration,
          kPi, limits.u_max[1] / p.Iyy * duration,
          kPi, limits.u_max[2] / p.Izz * duration;
  return hard;
}

StateVector soft_state_limits(const QuadParams& p) {
  StateVector soft;
  soft << kPi, p.soft_rate_limits[0], kPi, p.soft_rate_limits[1], kPi, p.soft_rate_limits[2];
  return soft;
}

MixResult mix_torques_to_motors(const TorqueInput& u, double total_thrust, const QuadParams& p) {
  const double hover = total_thrust / (4.0 * p.b);
  const double roll = u[0] / (2.0 * p.d * p.b);
  const double pitch = u[1] / (2.0 * p.d * p.b);
  const double yaw = u[2] / (4.0 * p.k);

  Eigen::Vector4d squared(hover + pitch + yaw,   // w1
                          hover - roll - yaw,    // w2
                          hover - pitch + yaw,   // w3
                          hover + roll - yaw);   // w4
  const double w_max_sq = p.w_max * p.w_max;
  MixResult result;
  for (int i = 0; i < 4; ++i) {
    const double clamped = std::clamp(squared[i], 0.0, w_max_sq);
    if (clamped != squared[i]) result.saturated = true;
    result.speeds[i] = std::sqrt(clamped);
  }
  result.realized = motors_to_torques(result.speeds, p);
  return result;
}

TorqueInput motors_to_torques(const MotorSpeeds& w, const QuadParams& p) {
  const Eigen::Vector4d sq = w.array().square();
  return TorqueInput(p.d * p.b * (sq[3] - sq[1]),
                     p.d * p.b * (sq[0] - sq[2]),
                     p.k * (sq[0] + sq[2] - sq[1] - sq[3]));
}

}  // namespace quadsim
