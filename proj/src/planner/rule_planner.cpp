#include "adbench/planner/rule_planner.hpp"

#include <algorithm>

#include "adbench/error.hpp"

namespace adbench::planner {

namespace {

// Lateral interval swept by the obstacle footprint relative to the slice
// centerline, measured at the footprint center's projection.
void footprint_lateral_extent(const std::vector<RouteWaypoint>& slice,
                              const std::vector<double>& slice_s, const OrientedBox& footprint,
                              double& center_lat, double& half_width, double& s_begin,
                              double& s_end) {
  // Project all four corners; the footprint may be rotated relative to the
  // route.
  const Route tmp = [&] {
    Route r;
    r.waypoints = slice;
    r.s = slice_s;
    r.length = slice_s.back();
    return r;
  }();
  double lo_lat = std::numeric_limits<double>::infinity(), hi_lat = -lo_lat;
  double lo_s = lo_lat, hi_s = -lo_lat;
  for (const Vec2& corner : footprint.corners()) {
    double s, lateral;
    tmp.project(corner, s, lateral);
    lo_lat = std::min(lo_lat, lateral);
    hi_lat = std::max(hi_lat, lateral);
    lo_s = std::min(lo_s, s);
    hi_s = std::max(hi_s, s);
  }
  center_lat = 0.5 * (lo_lat + hi_lat);
  half_width = 0.5 * (hi_lat - lo_lat);
  s_begin = lo_s;
  s_end = hi_s;
}

}  // namespace

std::vector<RouteWaypoint> cosine_detour(const std::vector<RouteWaypoint>& slice,
                                         const std::vector<double>& slice_s,
                                         const OrientedBox& footprint, double clearance,
                                         double ego_half_width, double ramp_length, int side,
                                         double available_offset) {
  if (slice.size() < 4 || slice_s.size() != slice.size()) {
    throw Error(ErrorKind::Config, "detour slice needs >= 4 waypoints");
  }
  if (clearance <= 0.0) throw Error(ErrorKind::Config, "clearance must be positive");

  double center_lat, half_width, obs_begin, obs_end;
  footprint_lateral_extent(slice, slice_s, footprint, center_lat, half_width, obs_begin, obs_end);

  // Fully outside the swept corridor: nothing to do.
  const double corridor = ego_half_width + clearance;
  if (center_lat - half_width > corridor || center_lat + half_width < -corridor) {
    return slice;
  }

  // Offset that puts the ego's near side `clearance` away from the obstacle's
  // far side, on the chosen side.
  const double edge = side > 0 ? center_lat + half_width : -(center_lat - half_width);
  const double peak = edge + ego_half_width + clearance;
  if (peak > available_offset) {
    throw Error(ErrorKind::InfeasibleDetour,
                "detour needs " + std::to_string(peak) + " m of lateral room, only " +
                    std::to_string(available_offset) + " m available");
  }

  const double plateau_begin = obs_begin;
  const double plateau_end = obs_end;
  const double ramp_in_begin = plateau_begin - ramp_length;
  const double ramp_out_end = plateau_end + ramp_length;

  const auto offset_at = [&](double s) -> double {
    if (s <= ramp_in_begin || s >= ramp_out_end) return 0.0;
    if (s < plateau_begin) {
      const double u = (s - ramp_in_begin) / ramp_length;
      return peak * 0.5 * (1.0 - std::cos(kPi * u));
    }
    if (s <= plateau_end) return peak;
    const double u = (ramp_out_end - s) / ramp_length;
    return peak * 0.5 * (1.0 - std::cos(kPi * u));
  };

  std::vector<RouteWaypoint> out = slice;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double o = side * offset_at(slice_s[i]);
    if (o != 0.0) {
      out[i].position += o * left_normal(slice[i].heading);
    }
  }
  // Refresh headings from the modified polyline; the cosine profile has zero
  // slope at its ends so the slice endpoints keep their original headings.
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    const Vec2 d = out[i + 1].position - out[i - 1].position;
    if (d.norm() > 1e-9) out[i].heading = std::atan2(d.y(), d.x());
  }
  return out;
}

RulePlanner::RulePlanner(std::shared_ptr<const Route> route, RulePlannerConfig config)
    : base_route_(std::move(route)), config_(std::move(config)) {
  if (!base_route_ || base_route_->waypoints.size() < 2) {
    throw Error(ErrorKind::Config, "rule planner needs a route");
  }
  working_route_ = *base_route_;
}

double RulePlanner::available_offset(const Observation& obs, double s, int side) const {
  if (!obs.map) return config_.max_lateral_fallback;
  const Vec2 p = base_route_->point_at(s);
  const int lane_id = obs.map->nearest_lane(p);
  if (lane_id < 0) return config_.max_lateral_fallback;
  const auto& lanes = obs.map->lanes;
  const auto* lane = &lanes[static_cast<std::size_t>(lane_id)];
  double s_lane, lateral;
  lane->project(p, s_lane, lateral);
  double room = 0.5 * lane->points.front().width;
  const int neighbor = side > 0 ? lane->left_neighbor : lane->right_neighbor;
  if (neighbor >= 0) room += lanes[static_cast<std::size_t>(neighbor)].points.front().width;
  return room + 0.25;  // curb tolerance
}

void RulePlanner::refresh_detour(const Observation& obs, double ego_s) {
  // Candidates: static boxes and crawling vehicles blocking the corridor
  // ahead.
  struct Candidate {
    double begin_s, end_s, center_lat, half_width;
    int id;
  };
  std::vector<Candidate> candidates;
  for (const auto& actor : obs.actors) {
    const bool slow_vehicle =
        actor.kind == AgentKind::Vehicle && actor.state.v < config_.slow_obstacle_speed;
    if (actor.kind != AgentKind::Static && !slow_vehicle) continue;
    double s, lateral;
    base_route_->project(actor.state.position(), s, lateral);
    if (s <= ego_s + 1.0 || s > ego_s + config_.detection_range) continue;

    double center_lat, half_width, s_begin, s_end;
    footprint_lateral_extent(base_route_->waypoints, base_route_->s,
                             OrientedBox{actor.state.position(), actor.state.psi, actor.half},
                             center_lat, half_width, s_begin, s_end);
    const double corridor = config_.ego_half.y() + config_.clearance;
    if (center_lat - half_width > corridor || center_lat + half_width < -corridor) continue;
    candidates.push_back({s_begin, s_end, center_lat, half_width, actor.id});
  }

  if (candidates.empty()) {
    if (state_.detour.active && ego_s > state_.detour.end_s) {
      state_.detour = {};
      working_route_ = *base_route_;
    } else if (!state_.detour.active) {
      working_route_ = *base_route_;
    }
    return;
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.begin_s < b.begin_s; });

  // Merge the leading group of nearby obstacles into one footprint.
  ObstacleGroup group;
  group.begin_s = candidates.front().begin_s;
  group.end_s = candidates.front().end_s;
  group.representative = candidates.front().id;
  double lo_lat = candidates.front().center_lat - candidates.front().half_width;
  double hi_lat = candidates.front().center_lat + candidates.front().half_width;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].begin_s > group.end_s + config_.group_merge_gap) break;
    group.end_s = std::max(group.end_s, candidates[i].end_s);
    lo_lat = std::min(lo_lat, candidates[i].center_lat - candidates[i].half_width);
    hi_lat = std::max(hi_lat, candidates[i].center_lat + candidates[i].half_width);
  }

  // Build the slice on the base route and pick the side with more room.
  const double slice_begin = std::max(0.0, group.begin_s - config_.detour_ramp - config_.detour_pad);
  const double slice_end =
      std::min(base_route_->length, group.end_s + config_.detour_ramp + config_.detour_pad);
  const std::size_t i0 = base_route_->index_at(slice_begin);
  const std::size_t i1 = base_route_->index_at(slice_end);
  if (i1 <= i0 + 3) return;  // too close to the route end to detour

  std::vector<RouteWaypoint> slice(base_route_->waypoints.begin() + static_cast<long>(i0),
                                   base_route_->waypoints.begin() + static_cast<long>(i1) + 1);
  std::vector<double> slice_s(base_route_->s.begin() + static_cast<long>(i0),
                              base_route_->s.begin() + static_cast<long>(i1) + 1);
  const double mid_s = 0.5 * (group.begin_s + group.end_s);
  OrientedBox footprint;
  footprint.center = base_route_->point_at(mid_s) +
                     0.5 * (lo_lat + hi_lat) * left_normal(base_route_->heading_at(mid_s));
  footprint.heading = base_route_->heading_at(mid_s);
  // Pad the plateau so the ego body is fully offset while alongside.
  footprint.half = {0.5 * (group.end_s - group.begin_s) + config_.detour_pad,
                    0.5 * (hi_lat - lo_lat) + 0.05};

  const double room_left = available_offset(obs, mid_s, +1);
  const double room_right = available_offset(obs, mid_s, -1);
  const double need_left = hi_lat + config_.ego_half.y() + config_.clearance;
  const double need_right = -lo_lat + config_.ego_half.y() + config_.clearance;
  int side;
  if (need_left <= room_left && (need_left <= need_right || need_right > room_right)) {
    side = +1;
  } else {
    side = -1;
  }

  const auto detoured =
      cosine_detour(slice, slice_s, footprint, config_.clearance, config_.ego_half.y(),
                    config_.detour_ramp, side, side > 0 ? room_left : room_right);

  Route modified = *base_route_;
  std::copy(detoured.begin(), detoured.end(),
            modified.waypoints.begin() + static_cast<long>(i0));
  working_route_ = Route::from_waypoints(std::move(modified.waypoints));

  state_.detour.active = true;
  state_.detour.obstacle_id = group.representative;
  state_.detour.begin_s = slice_begin;
  state_.detour.end_s = slice_end;
  state_.detour.peak_offset = side > 0 ? need_left : -need_right;
}

double RulePlanner::target_speed(const Observation& obs, double ego_s) const {
  const double cap = config_.speed_cap_factor * working_route_.speed_limit_at(ego_s);
  double v_target = cap;
  const double v = obs.ego.v;

  // Curvature slowdown over the upcoming stretch.
  if (config_.max_lateral_accel > 0.0) {
    for (double ds = 2.0; ds <= 20.0; ds += 2.0) {
      const double s0 = std::min(ego_s + ds - 2.0, working_route_.length);
      const double s1 = std::min(ego_s + ds, working_route_.length);
      if (s1 - s0 < 0.5) break;
      const double kappa =
          std::abs(angle_diff(working_route_.heading_at(s1), working_route_.heading_at(s0))) /
          (s1 - s0);
      if (kappa > 1e-4) {
        v_target = std::min(v_target, std::sqrt(config_.max_lateral_accel / kappa));
      }
    }
  }

  IdmParams idm = config_.idm;
  idm.desired_speed = std::max(cap, 0.1);

  const auto idm_candidate = [&](double gap, double leader_speed) {
    const double accel = idm_accel(v, gap, leader_speed, idm);
    return std::max(0.0, v + accel * config_.idm_candidate_horizon);
  };

  // Leading vehicles inside the corridor.
  for (const auto& actor : obs.actors) {
    if (actor.kind != AgentKind::Vehicle) continue;
    if (actor.state.v < config_.slow_obstacle_speed) continue;  // detoured instead
    double s, lateral;
    working_route_.project(actor.state.position(), s, lateral);
    if (std::abs(lateral) > config_.corridor_halfwidth) continue;
    const double gap = s - ego_s - config_.ego_half.x() - actor.half.x();
    if (gap <= 0.0 || s - ego_s > config_.detection_range) continue;
    // Only actors heading the same general direction count as leaders.
    if (std::cos(angle_diff(actor.state.psi, working_route_.heading_at(s))) < 0.0) continue;
    v_target = std::min(v_target, idm_candidate(gap, actor.state.v));
  }

  // Red lights and unserved stop signs become standing leaders at the line.
  const auto line_query = [&](double line_s) {
    const double gap = line_s - ego_s - config_.ego_half.x();
    if (gap > config_.detection_range) return;
    v_target = std::min(v_target, idm_candidate(std::max(gap, 1e-3), 0.0));
  };
  for (const auto& light : obs.lights) {
    if (!light.on_route || light.route_s <= ego_s) continue;
    if (light.phase == sim::LightPhase::Red) line_query(light.route_s);
  }
  for (const auto& sign : obs.stop_signs) {
    if (!sign.on_route || sign.route_s <= ego_s) continue;
    const bool satisfied =
        std::find(state_.satisfied_signs.begin(), state_.satisfied_signs.end(), sign.id) !=
        state_.satisfied_signs.end();
    if (!satisfied) line_query(sign.route_s);
  }

  // Two-second inflated forecast sweep along the working route. Detour
  // targets (statics and crawling vehicles) keep their true extents: the
  // detour already budgets clearance for them, and time inflation would veto
  // every pass.
  std::vector<RolloutAgent> rollout_agents;
  for (const auto& actor : obs.actors) {
    if ((actor.state.position() - obs.ego.position()).norm() > config_.detection_range + 20.0) {
      continue;
    }
    RolloutAgent agent;
    agent.agent_id = actor.id;
    if (actor.kind == AgentKind::Pedestrian) {
      agent.kind = AgentKind::Pedestrian;
    } else if (actor.kind == AgentKind::Static ||
               actor.state.v < config_.slow_obstacle_speed) {
      agent.kind = AgentKind::Static;
    } else {
      agent.kind = AgentKind::Vehicle;
    }
    agent.half = actor.half;
    agent.state = actor.state;
    agent.control = actor.control;
    rollout_agents.push_back(agent);
  }
  if (rollout_agents.empty()) return v_target;

  TrajectorySet forecast = inflate(
      predict_rollout(rollout_agents, config_.forecast_horizon, config_.forecast_dt,
                      config_.vehicle),
      config_.vehicle_inflation, config_.pedestrian_inflation, config_.ego_inflation);

  // Ego sweep at the candidate target speed.
  const int steps = forecast.steps;
  double sweep_v = v;
  double sweep_s = ego_s;
  bool vehicle_conflict = false;
  int pedestrian_conflict = -1;
  for (int k = 0; k < steps && !vehicle_conflict; ++k) {
    const double accel = std::clamp((v_target - sweep_v) / config_.forecast_dt,
                                    config_.vehicle.accel_min, config_.vehicle.accel_max);
    sweep_v = std::max(0.0, sweep_v + accel * config_.forecast_dt);
    sweep_s += sweep_v * config_.forecast_dt;
    const double scale =
        1.0 + (config_.ego_inflation - 1.0) * static_cast<double>(k + 1) / steps;
    const OrientedBox ego_box{working_route_.point_at(std::min(sweep_s, working_route_.length)),
                              working_route_.heading_at(sweep_s),
                              Vec2(config_.ego_half * scale)};
    for (const auto& agent : forecast.agents) {
      if (!boxes_overlap(ego_box, agent.box_at_step(static_cast<std::size_t>(k)))) continue;
      if (agent.kind == AgentKind::Pedestrian) {
        pedestrian_conflict = agent.agent_id;
      } else {
        vehicle_conflict = true;  // vehicles and statics stop the sweep
        break;
      }
    }
  }

  if (vehicle_conflict) return 0.0;
  if (pedestrian_conflict >= 0) {
    // Fresh IDM query with the pedestrian as the leader.
    for (const auto& actor : obs.actors) {
      if (actor.id != pedestrian_conflict) continue;
      double s, lateral;
      working_route_.project(actor.state.position(), s, lateral);
      const double gap = s - ego_s - config_.ego_half.x() - actor.half.x();
      const double along = actor.state.v * std::cos(angle_diff(actor.state.psi,
                                                               working_route_.heading_at(s)));
      v_target = std::min(v_target, idm_candidate(gap, std::max(0.0, along)));
    }
  }
  return v_target;
}

ControlInput RulePlanner::plan(const Observation& obs) {
  double ego_s, ego_lat;
  working_route_.project(obs.ego.position(), ego_s, ego_lat);

  try {
    refresh_detour(obs, ego_s);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InfeasibleDetour) throw;
    // Cannot pass: stop in lane.
    state_.last_target_speed = 0.0;
    return {0.0, -config_.brake_accel_gain};
  }
  working_route_.project(obs.ego.position(), ego_s, ego_lat);

  // Serve stop signs: a full stop inside the stop zone releases the line.
  for (const auto& sign : obs.stop_signs) {
    if (!sign.on_route) continue;
    const bool near = sign.route_s - ego_s > 0.0 &&
                      sign.route_s - ego_s < config_.stop_zone_length + config_.ego_half.x();
    if (near && obs.ego.v < 0.15 &&
        std::find(state_.satisfied_signs.begin(), state_.satisfied_signs.end(), sign.id) ==
            state_.satisfied_signs.end()) {
      state_.satisfied_signs.push_back(sign.id);
    }
  }

  const double v_target = target_speed(obs, ego_s);
  state_.last_target_speed = v_target;

  // Aim point: mean of the two waypoints beyond the speed-scaled lookahead.
  const double lookahead =
      std::max(config_.lookahead_min, config_.lookahead_time * obs.ego.v);
  std::size_t i = working_route_.index_at(std::min(ego_s + lookahead, working_route_.length));
  if (i + 1 >= working_route_.waypoints.size()) i = working_route_.waypoints.size() - 2;
  const Vec2 aim = 0.5 * (working_route_.waypoints[i].position +
                          working_route_.waypoints[i + 1].position);

  const double steer =
      pid_steer(obs.ego, aim, config_.pid, obs.dt, state_.pid, config_.vehicle.max_steer);

  const LongitudinalCommand cmd = longitudinal_control(obs.ego.v, v_target, config_.longitudinal);
  const double accel =
      cmd.throttle * config_.throttle_accel_gain - cmd.brake * config_.brake_accel_gain;
  return {steer, accel};
}

}  // namespace adbench::planner
