#pragma once

#include <Eigen/Dense>

namespace quadsim {

/// State ordering: [phi, phi_dot, theta, theta_dot, psi, psi_dot].
using StateVector = Eigen::Matrix<double, 6, 1>;
/// Body torques [U1, U2, U3] in N*m.
using TorqueInput = Eigen::Vector3d;
/// Propeller angular speeds w1..w4 in rad/s.
using MotorSpeeds = Eigen::Vector4d;
using Matrix3 = Eigen::Matrix3d;

enum StateIndex : int {
  kPhi = 0,
  kPhiDot = 1,
  kTheta = 2,
  kThetaDot = 3,
  kPsi = 4,
  kPsiDot = 5,
};

inline constexpr double kPi = 3.14159265358979323846;

/// Physical airframe constants. Defaults are the reference airframe.
struct QuadParams {
  double Ixx = 0.0213;
  double Iyy = 0.02217;
  double Izz = 0.0282;
  double m = 1.587;
  double g = 9.81;
  double d = 0.243;
  double b = 3.7102e-5;
  double k = 7.6933e-7;
  double w_max = 494.27;
  Eigen::Vector3d soft_rate_limits{35.0, 35.0, 35.0};

  /// Hover propeller speed sqrt(m*g / (4*b)).
  double w_min() const;

  /// Throws Error(kInvalidParams) naming the offending field.
  void validate() const;
};

struct LinearModel {
  Eigen::Matrix<double, 6, 6> A;
  Eigen::Matrix<double, 6, 3> B;
  Eigen::Matrix<double, 6, 6> C;
  Eigen::Matrix<double, 6, 3> D;
};

struct InputLimits {
  TorqueInput u_max;
  TorqueInput u_min;
};

struct StateLimits {
  StateVector hard;
  StateVector soft;
};

struct MixResult {
  MotorSpeeds speeds;
  TorqueInput realized;
  bool saturated = false;
};

/// Body-to-earth rotation (ZYX Euler). Throws on non-finite angles.
Matrix3 rotation_matrix(double phi, double theta, double psi);

/// Rigid-body rotational dynamics with gyroscopic coupling.
StateVector nonlinear_deriv(const StateVector& x, const TorqueInput& u, const QuadParams& p);

StateVector linear_deriv(const StateVector& x, const TorqueInput& u, const LinearModel& model);

/// Hover linearization: three decoupled double integrators.
LinearModel build_linear_model(const QuadParams& p);

InputLimits compute_input_limits(const QuadParams& p);

/// Angles are bounded by pi; rates by the torque limit integrated over the episode.
StateVector compute_hard_state_limits(const QuadParams& p, double t_start, double t_end);

StateVector soft_state_limits(const QuadParams& p);

/// Solves the 4x4 mixing system closed by the total-thrust constraint, clamps
/// squared speeds to [0, w_max^2] and reports the torques actually produced.
MixResult mix_torques_to_motors(const TorqueInput& u, double total_thrust, const QuadParams& p);

TorqueInput motors_to_torques(const MotorSpeeds& w, const QuadParams& p);

constexpr double rpm_to_rad_per_s(double rpm) { return rpm * 2.0 * kPi / 60.0; }

}  // namespace quadsim
