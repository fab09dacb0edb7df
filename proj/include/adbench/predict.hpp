#pragma once

#include <vector>

#include "adbench/geometry.hpp"
#include "adbench/models.hpp"

namespace adbench {

enum class AgentKind { Vehicle, Pedestrian, Static };

// Last second of observed agent states, sampled at 10 Hz (11 samples
// including the current one).
struct AgentHistory {
  int agent_id = -1;
  AgentKind kind = AgentKind::Vehicle;
  bool is_ego = false;
  Vec2 half{2.0, 1.0};
  std::vector<EgoState> samples;  // time-ordered, oldest first
};

inline constexpr int kHistorySamples = 11;
inline constexpr double kHistoryDt = 0.1;
inline constexpr int kForecastSteps = 80;   // 8 s horizon
inline constexpr double kForecastDt = 0.1;

struct TrajectoryPoint {
  double t = 0.0;
  Vec2 position{0.0, 0.0};
  double heading = 0.0;
};

struct TrajectoryMode {
  double probability = 1.0;
  std::vector<TrajectoryPoint> points;  // one per forecast step, t = dt..steps*dt
};

struct AgentForecast {
  int agent_id = -1;
  AgentKind kind = AgentKind::Vehicle;
  bool is_ego = false;
  Vec2 base_half{2.0, 1.0};
  std::vector<TrajectoryMode> modes;
  std::vector<Vec2> half_extents;  // per forecast step, inflated over time
  bool zero_velocity_fallback = false;

  OrientedBox box_at_step(std::size_t step, std::size_t mode = 0) const;
  // Index of the highest-probability mode.
  std::size_t best_mode() const;
};

struct TrajectorySet {
  double dt = kForecastDt;
  int steps = kForecastSteps;
  std::vector<AgentForecast> agents;
};

// Constant-velocity extrapolation from the last two history samples; single
// mode with probability 1. A one-sample history falls back to zero velocity
// and flags the forecast.
TrajectorySet predict_cv(const std::vector<AgentHistory>& histories, int steps = kForecastSteps,
                         double dt = kForecastDt);

struct RolloutAgent {
  int agent_id = -1;
  AgentKind kind = AgentKind::Vehicle;
  bool is_ego = false;
  Vec2 half{2.0, 1.0};
  EgoState state;
  ControlInput control;  // held constant over the rollout
};

// Short-horizon rollout: vehicles integrate the kinematic bicycle holding
// their current control, pedestrians move in a straight line.
TrajectorySet predict_rollout(const std::vector<RolloutAgent>& agents, double horizon = 2.0,
                              double dt = 0.05, const BicycleParams& params = {});

// Grows half extents linearly from 100% at t=0 to the terminal factor at the
// final step. Factors must be >= 1.
TrajectorySet inflate(TrajectorySet trajectories, double vehicle_factor, double pedestrian_factor,
                      double ego_factor);

// Linear-in-time resampling of every mode (and the half extents) onto a new
// step grid; endpoints at shared timestamps are preserved.
TrajectorySet resample(const TrajectorySet& trajectories, int steps, double dt);

}  // namespace adbench
