#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <numeric>
#include <ostream>
#include <sstream>

#include "error.hpp"
#include "json.hpp"

namespace quadsim {

namespace {

// Linear interpolation of the time at which the segment (i-1, i) reaches `level`.
double crossing_time(const std::vector<double>& t, const std::vector<double>& y, std::size_t i, double level) {
  if (i == 0) return t[0];
  const double y0 = y[i - 1], y1 = y[i];
  if (y1 == y0) return t[i];
  const double frac = std::clamp((level - y0) / (y1 - y0), 0.0, 1.0);
  return t[i - 1] + frac * (t[i] - t[i - 1]);
}

std::optional<std::size_t> first_at_or_above(const std::vector<double>& y, double level) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= level) return i;
  }
  return std::nullopt;
}

nlohmann::json to_json(const StepResponseMetrics& m) {
  return {{"computation_time", m.computation_time},
          {"rise_time", m.rise_time},
          {"settling_time", m.settling_time},
          {"overshoot_pct", m.overshoot_pct},
          {"peak_time", m.peak_time},
          {"steady_state_error", m.steady_state_error},
          {"total_reward", m.total_reward},
          {"did_not_rise", m.did_not_rise},
          {"did_not_settle", m.did_not_settle}};
}

}  // namespace

void Trajectory::validate() const {
  const std::size_t n = time.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "trajectory is empty");
  if (state.size() != n || observation.size() != n || action.size() != n || realized.size() != n ||
      reward.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory series have unequal lengths");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(time[i] > time[i - 1])) throw Error(ErrorCode::kInvalidArgument, "trajectory time grid not increasing");
  }
}

Axis parse_axis(const std::string& name) {
  if (name == "roll") return Axis::kRoll;
  if (name == "pitch") return Axis::kPitch;
  if (name == "yaw") return Axis::kYaw;
  throw Error(ErrorCode::kInvalidArgument, "unknown axis '" + name + "' (expected roll, pitch or yaw)");
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::kRoll: return "roll";
    case Axis::kPitch: return "pitch";
    case Axis::kYaw: return "yaw";
  }
  return "roll";
}

int axis_state_index(Axis axis) {
  switch (axis) {
    case Axis::kRoll: return kPhi;
    case Axis::kPitch: return kTheta;
    case Axis::kYaw: return kPsi;
  }
  return kPhi;
}

void MetricsConfig::validate() const {
  if (!(rise_low > 0.0 && rise_low < rise_high && rise_high < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "metrics: need 0 < rise_low < rise_high < 1");
  }
  if (!(settling_band > 0.0)) throw Error(ErrorCode::kInvalidConfig, "metrics.settling_band must be > 0");
  if (!(steady_state_window > 0.0 && steady_state_window <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "metrics.steady_state_window must be in (0, 1]");
  }
}

StepResponseMetrics step_response_metrics(const std::vector<double>& time, const std::vector<double>& response,
                                          double step_ref, const MetricsConfig& cfg) {
  cfg.validate();
  if (time.empty() || time.size() != response.size()) {
    throw Error(ErrorCode::kInvalidArgument, "step_response_metrics: empty or mismatched series");
  }
  if (step_ref == 0.0 || !std::isfinite(step_ref)) {
    throw Error(ErrorCode::kInvalidArgument, "step_response_metrics: step reference must be finite and nonzero");
  }
  std::vector<double> y(response.size());
  std::transform(response.begin(), response.end(), y.begin(), [&](double v) { return v / step_ref; });
  const double t_end = time.back();
  const std::size_t n = y.size();

  StepResponseMetrics m;
  const auto low = first_at_or_above(y, cfg.rise_low);
  const auto high = first_at_or_above(y, cfg.rise_high);
  if (!low || !high) {
    m.did_not_rise = true;
    m.rise_time = t_end;
  } else {
    m.rise_time = crossing_time(time, y, *high, cfg.rise_high) - crossing_time(time, y, *low, cfg.rise_low);
  }

  std::optional<std::size_t> last_outside;
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(y[i] - 1.0) > cfg.settling_band) {
      last_outside = i;
      break;
    }
  }
  if (m.did_not_rise || (last_outside && *last_outside == n - 1)) {
    m.did_not_settle = true;
    m.settling_time = t_end;
  } else if (!last_outside) {
    m.settling_time = time.front();
  } else {
    const std::size_t j = *last_outside + 1;
    const double edge = y[j - 1] > 1.0 ? 1.0 + cfg.settling_band : 1.0 - cfg.settling_band;
    m.settling_time = crossing_time(time, y, j, edge);
  }

  const auto peak = std::max_element(y.begin(), y.end());
  m.peak_time = time[static_cast<std::size_t>(peak - y.begin())];
  m.overshoot_pct = std::max(0.0, (*peak - 1.0) * 100.0);

  const double window_start = t_end - cfg.steady_state_window * (t_end - time.front());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (time[i] >= window_start) {
      sum += step_ref - response[i];
      ++count;
    }
  }
  m.steady_state_error = std::abs(sum / static_cast<double>(count));
  return m;
}

StepResponseMetrics compute_metrics(const Trajectory& traj, Axis axis, double step_ref, const MetricsConfig& cfg) {
  traj.validate();
  const int idx = axis_state_index(axis);
  std::vector<double> response(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) response[i] = traj.state[i][idx];
  StepResponseMetrics m = step_response_metrics(traj.time, response, step_ref, cfg);
  m.total_reward = std::accumulate(traj.reward.begin(), traj.reward.end(), 0.0);
  m.computation_time = traj.wall_clock_s;
  return m;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "Computation Time (sec)", "Rise Time (sec)",          "Settling Time (sec)",     "Overshoot Percentage (%)",
      "Peak Time (sec)",        "Steady State Error (rad)", "Total Reward (unitless)",
  };
  return names;
}

std::vector<double> metric_values(const StepResponseMetrics& m) {
  return {m.computation_time, m.rise_time,          m.settling_time, m.overshoot_pct,
          m.peak_time,        m.steady_state_error, m.total_reward};
}

std::string metrics_table_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << std::setprecision(10) << "metric";
  for (const auto& [label, m] : rows) out << ',' << label;
  out << '\n';
  const auto& names = metric_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    out << '"' << names[k] << '"';
    for (const auto& row : rows) out << ',' << metric_values(row.second)[k];
    out << '\n';
  }
  return out.str();
}

std::string metrics_table_text(const std::vector<MetricsRow>& rows) {
  const auto& names = metric_names();
  std::size_t name_width = 0;
  for (const auto& n : names) name_width = std::max(name_width, n.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width) + 2) << "Performance Metric";
  for (const auto& row : rows) out << std::right << std::setw(12) << row.first;
  out << '\n';
  for (std::size_t k = 0; k < names.size(); ++k) {
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << names[k];
    for (const auto& row : rows) {
      out << std::right << std::setw(12) << std::fixed << std::setprecision(4) << metric_values(row.second)[k];
    }
    out << '\n';
  }
  return out.str();
}

std::string metrics_table_json(const std::vector<MetricsRow>& rows) {
  nlohmann::json j;
  j["metrics"] = metric_names();
  j["rows"] = nlohmann::json::array();
  for (const auto& [label, m] : rows) {
    nlohmann::json r = to_json(m);
    r["label"] = label;
    r["values"] = metric_values(m);
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2);
}

std::string metrics_json(const StepResponseMetrics& m) { return to_json(m).dump(2); }

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,phi,phi_dot,theta,theta_dot,psi,psi_dot,u1,u2,u3,reward\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << traj.time[i];
    for (int c = 0; c < 6; ++c) out << ',' << traj.state[i][c];
    for (int c = 0; c < 3; ++c) out << ',' << traj.realized[i][c];
    out << ',' << traj.reward[i] << '\n';
  }
}

}  // namespace quadsim
