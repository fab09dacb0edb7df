#include "adbench/predict.hpp"

#include <algorithm>

#include "adbench/error.hpp"

namespace adbench {

OrientedBox AgentForecast::box_at_step(std::size_t step, std::size_t mode) const {
  const TrajectoryPoint& p = modes[mode].points[step];
  return {p.position, p.heading, half_extents[step]};
}

std::size_t AgentForecast::best_mode() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    if (modes[i].probability > modes[best].probability) best = i;
  }
  return best;
}

TrajectorySet predict_cv(const std::vector<AgentHistory>& histories, int steps, double dt) {
  if (steps < 1) throw Error(ErrorKind::Config, "predict_cv needs steps >= 1");
  TrajectorySet out;
  out.dt = dt;
  out.steps = steps;
  out.agents.reserve(histories.size());

  for (const AgentHistory& history : histories) {
    if (history.samples.empty()) {
      throw Error(ErrorKind::Config, "empty history for agent " + std::to_string(history.agent_id));
    }
    AgentForecast forecast;
    forecast.agent_id = history.agent_id;
    forecast.kind = history.kind;
    forecast.is_ego = history.is_ego;
    forecast.base_half = history.half;

    const EgoState& last = history.samples.back();
    Vec2 velocity{0.0, 0.0};
    if (history.samples.size() >= 2) {
      const EgoState& prev = history.samples[history.samples.size() - 2];
      velocity = (last.position() - prev.position()) / kHistoryDt;
    } else {
      forecast.zero_velocity_fallback = true;
    }

    TrajectoryMode mode;
    mode.probability = 1.0;
    mode.points.reserve(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k) {
      TrajectoryPoint p;
      p.t = k * dt;
      p.position = last.position() + p.t * velocity;
      p.heading = last.psi;
      mode.points.push_back(p);
    }
    forecast.modes.push_back(std::move(mode));
    forecast.half_extents.assign(static_cast<std::size_t>(steps), history.half);
    out.agents.push_back(std::move(forecast));
  }
  return out;
}

TrajectorySet predict_rollout(const std::vector<RolloutAgent>& agents, double horizon, double dt,
                              const BicycleParams& params) {
  if (horizon > 2.0 + 1e-9) throw Error(ErrorKind::Config, "rollout horizon capped at 2 s");
  const int steps = static_cast<int>(std::round(horizon / dt));
  TrajectorySet out;
  out.dt = dt;
  out.steps = steps;
  out.agents.reserve(agents.size());

  for (const RolloutAgent& agent : agents) {
    AgentForecast forecast;
    forecast.agent_id = agent.agent_id;
    forecast.kind = agent.kind;
    forecast.is_ego = agent.is_ego;
    forecast.base_half = agent.half;

    TrajectoryMode mode;
    mode.probability = 1.0;
    mode.points.reserve(static_cast<std::size_t>(steps));
    EgoState state = agent.state;
    for (int k = 1; k <= steps; ++k) {
      if (agent.kind == AgentKind::Vehicle) {
        state = bicycle_step(state, agent.control, dt, params);
      } else if (agent.kind == AgentKind::Pedestrian) {
        state.x += state.v * std::cos(state.psi) * dt;
        state.y += state.v * std::sin(state.psi) * dt;
      }
      mode.points.push_back({k * dt, state.position(), state.psi});
    }
    forecast.modes.push_back(std::move(mode));
    forecast.half_extents.assign(static_cast<std::size_t>(steps), agent.half);
    out.agents.push_back(std::move(forecast));
  }
  return out;
}

TrajectorySet inflate(TrajectorySet trajectories, double vehicle_factor, double pedestrian_factor,
                      double ego_factor) {
  if (vehicle_factor < 1.0 || pedestrian_factor < 1.0 || ego_factor < 1.0) {
    throw Error(ErrorKind::Config, "inflation factors must be >= 1");
  }
  for (AgentForecast& agent : trajectories.agents) {
    // Static boxes carry no motion uncertainty and keep their size.
    const double factor = agent.is_ego                           ? ego_factor
                          : agent.kind == AgentKind::Static      ? 1.0
                          : agent.kind == AgentKind::Pedestrian  ? pedestrian_factor
                                                                 : vehicle_factor;
    const std::size_t n = agent.half_extents.size();
    for (std::size_t k = 0; k < n; ++k) {
      // 100% at t=0, terminal factor at the final step.
      const double scale = 1.0 + (factor - 1.0) * static_cast<double>(k + 1) / static_cast<double>(n);
      agent.half_extents[k] = agent.base_half * scale;
    }
  }
  return trajectories;
}

TrajectorySet resample(const TrajectorySet& trajectories, int steps, double dt) {
  TrajectorySet out;
  out.dt = dt;
  out.steps = steps;
  out.agents.reserve(trajectories.agents.size());
  const double t_max = trajectories.steps * trajectories.dt;

  for (const AgentForecast& src : trajectories.agents) {
    AgentForecast dst;
    dst.agent_id = src.agent_id;
    dst.kind = src.kind;
    dst.is_ego = src.is_ego;
    dst.base_half = src.base_half;
    dst.zero_velocity_fallback = src.zero_velocity_fallback;

    const auto sample = [&](const std::vector<TrajectoryPoint>& pts, double t) -> TrajectoryPoint {
      // Source grid: t_k = (k+1) * src_dt.
      const double clamped = std::clamp(t, trajectories.dt, t_max);
      const double u = clamped / trajectories.dt - 1.0;
      const std::size_t lo = std::min(static_cast<std::size_t>(std::floor(u)), pts.size() - 1);
      const std::size_t hi = std::min(lo + 1, pts.size() - 1);
      const double frac = std::clamp(u - static_cast<double>(lo), 0.0, 1.0);
      TrajectoryPoint p;
      p.t = t;
      p.position = pts[lo].position + frac * (pts[hi].position - pts[lo].position);
      p.heading = wrap_angle(pts[lo].heading + frac * angle_diff(pts[hi].heading, pts[lo].heading));
      return p;
    };

    for (const TrajectoryMode& mode : src.modes) {
      TrajectoryMode resampled;
      resampled.probability = mode.probability;
      for (int k = 1; k <= steps; ++k) resampled.points.push_back(sample(mode.points, k * dt));
      dst.modes.push_back(std::move(resampled));
    }
    for (int k = 1; k <= steps; ++k) {
      const double t = std::clamp(k * dt, trajectories.dt, t_max);
      const double u = t / trajectories.dt - 1.0;
      const std::size_t lo =
          std::min(static_cast<std::size_t>(std::floor(u)), src.half_extents.size() - 1);
      const std::size_t hi = std::min(lo + 1, src.half_extents.size() - 1);
      const double frac = std::clamp(u - static_cast<double>(lo), 0.0, 1.0);
      dst.half_extents.push_back(src.half_extents[lo] +
                                 frac * (src.half_extents[hi] - src.half_extents[lo]));
    }
    out.agents.push_back(std::move(dst));
  }
  return out;
}

}  // namespace adbench
