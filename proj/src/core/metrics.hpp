#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "env.hpp"

namespace quadsim {

/// Per-control-step log of one episode. Row 0 is the post-reset state at
/// t = 0 with zero action and zero reward.
struct Trajectory {
  std::vector<double> time;
  std::vector<StateVector> state;
  std::vector<Observation> observation;
  std::vector<TorqueInput> action;
  std::vector<TorqueInput> realized;
  std::vector<double> reward;
  StateVector reference = StateVector::Zero();
  double wall_clock_s = 0.0;

  std::size_t size() const { return time.size(); }
  /// Throws unless the time grid is strictly increasing and all series match.
  void validate() const;
};

enum class Axis { kRoll, kPitch, kYaw };

Axis parse_axis(const std::string& name);
std::string axis_name(Axis axis);
int axis_state_index(Axis axis);

struct MetricsConfig {
  double rise_low = 0.1;
  double rise_high = 0.9;
  double settling_band = 0.02;
  double steady_state_window = 0.1;  // trailing fraction of the horizon

  void validate() const;
};

struct StepResponseMetrics {
  double computation_time = 0.0;
  double rise_time = 0.0;
  double settling_time = 0.0;
  double overshoot_pct = 0.0;
  double peak_time = 0.0;
  double steady_state_error = 0.0;
  double total_reward = 0.0;
  bool did_not_rise = false;
  bool did_not_settle = false;
};

/// Step-response metrics of a sampled response y(t) to a step of `step_ref`
/// applied at t = time.front().
StepResponseMetrics step_response_metrics(const std::vector<double>& time, const std::vector<double>& response,
                                          double step_ref, const MetricsConfig& cfg = {});

/// Metrics for one axis of a logged episode; adds total reward and wall clock.
StepResponseMetrics compute_metrics(const Trajectory& traj, Axis axis, double step_ref,
                                    const MetricsConfig& cfg = {});

using MetricsRow = std::pair<std::string, StepResponseMetrics>;

/// Metric names in report order.
const std::vector<std::string>& metric_names();
std::vector<double> metric_values(const StepResponseMetrics& m);

std::string metrics_table_csv(const std::vector<MetricsRow>& rows);
std::string metrics_table_text(const std::vector<MetricsRow>& rows);
std::string metrics_table_json(const std::vector<MetricsRow>& rows);
std::string metrics_json(const StepResponseMetrics& m);

/// Columns: t, phi, phi_dot, theta, theta_dot, psi, psi_dot, u1, u2, u3, reward.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace quadsim
