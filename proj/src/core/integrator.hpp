#pragma once

#include <functional>
#include <optional>

#include "dynamics.hpp"

namespace quadsim {

struct IntegratorConfig {
  double sim_frequency = 250.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int max_internal_steps = 10'000;
  // When set, the adaptive controller is bypassed and every grid interval is
  // split into equal steps no longer than this. Used for convergence studies.
  std::optional<double> fixed_step;

  void validate() const;
};

using Derivative = std::function<StateVector(const StateVector&, const TorqueInput&)>;

/// Dormand-Prince 5(4) integration of `deriv` with `u` held constant.
///
/// The solution is materialized at every grid point t0 + i*dt_sub for
/// i = 1..n_substeps; internal adaptive steps are truncated so that none
/// crosses a grid point. Throws IntegrationError when the per-interval step
/// budget runs out or the state stops being finite.
StateVector integrate_interval(const Derivative& deriv, const StateVector& x0, const TorqueInput& u,
                               int n_substeps, double dt_sub, const IntegratorConfig& cfg,
                               double t0 = 0.0);

}  // namespace quadsim
