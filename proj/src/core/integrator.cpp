#include "integrator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace quadsim {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

struct StepOutcome {
  StateVector x;
  StateVector k_last;  // derivative at x (first-same-as-last)
  double error_norm;
};

StepOutcome dopri_step(const Derivative& f, const StateVector& x, const StateVector& k1, const TorqueInput& u,
                       double h, const IntegratorConfig& cfg) {
  const StateVector k2 = f(x + h * (a21 * k1), u);
  const StateVector k3 = f(x + h * (a31 * k1 + a32 * k2), u);
  const StateVector k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3), u);
  const StateVector k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), u);
  const StateVector k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), u);
  StepOutcome out;
  out.x = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  out.k_last = f(out.x, u);
  const StateVector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.k_last);
  const StateVector scale =
      (cfg.abs_tol + cfg.rel_tol * x.cwiseAbs().cwiseMax(out.x.cwiseAbs()).array()).matrix();
  out.error_norm = std::sqrt((err.array() / scale.array()).square().mean());
  return out;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!std::isfinite(sim_frequency) || sim_frequency <= 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "integrator: sim_frequency must be > 0");
  }
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "integrator: rel_tol and abs_tol must be > 0");
  }
  if (max_internal_steps <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "integrator: max_internal_steps must be > 0");
  }
  if (fixed_step && !(*fixed_step > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "integrator: fixed_step must be > 0");
  }
}

StateVector integrate_interval(const Derivative& deriv, const StateVector& x0, const TorqueInput& u,
                               int n_substeps, double dt_sub, const IntegratorConfig& cfg, double t0) {
  if (n_substeps < 0 || !(dt_sub > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "integrate_interval: need n_substeps >= 0 and dt_sub > 0");
  }
  StateVector x = x0;
  StateVector k1 = deriv(x, u);
  double h = dt_sub;

  for (int i = 0; i < n_substeps; ++i) {
    const double grid_start = t0 + i * dt_sub;
    if (!x.allFinite() || !k1.allFinite()) {
      throw IntegrationError("integrate_interval: non-finite state", grid_start);
    }

    if (cfg.fixed_step) {
      const int pieces = std::max(1, static_cast<int>(std::ceil(dt_sub / *cfg.fixed_step - 1e-9)));
      const double hf = dt_sub / pieces;
      for (int j = 0; j < pieces; ++j) {
        StepOutcome s = dopri_step(deriv, x, k1, u, hf, cfg);
        x = s.x;
        k1 = s.k_last;
      }
      continue;
    }

    double elapsed = 0.0;
    int steps = 0;
    while (elapsed < dt_sub) {
      if (++steps > cfg.max_internal_steps) {
        throw IntegrationError("integrate_interval: exceeded " + std::to_string(cfg.max_internal_steps) +
                                   " internal steps in one grid interval",
                               grid_start + elapsed);
      }
      const double remaining = dt_sub - elapsed;
      // Land exactly on the grid point instead of leaving a sliver step.
      const bool last = h >= remaining * (1.0 - 1e-12);
      const double step = last ? remaining : h;
      StepOutcome s = dopri_step(deriv, x, k1, u, step, cfg);
      if (!s.x.allFinite()) {
        throw IntegrationError("integrate_interval: non-finite state", grid_start + elapsed);
      }
      const double factor =
          s.error_norm == 0.0 ? kMaxFactor
                              : std::clamp(kSafety * std::pow(s.error_norm, -0.2), kMinFactor, kMaxFactor);
      if (s.error_norm <= 1.0) {
        x = s.x;
        k1 = s.k_last;
        elapsed = last ? dt_sub : elapsed + step;
        // Do not let the truncated grid-landing step shrink the next guess.
        h = last ? std::max(h, step * factor) : step * factor;
      } else {
        h = step * std::max(factor, kMinFactor);
      }
    }
  }
  return x;
}

}  // namespace quadsim
