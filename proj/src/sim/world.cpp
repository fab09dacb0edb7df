#include "adbench/sim/world.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "adbench/error.hpp"

namespace adbench::sim {

const char* to_string(InfractionKind kind) {
  switch (kind) {
    case InfractionKind::CollisionPedestrian: return "collision-pedestrian";
    case InfractionKind::CollisionVehicle: return "collision-vehicle";
    case InfractionKind::CollisionStatic: return "collision-static";
    case InfractionKind::RedLight: return "red-light";
    case InfractionKind::StopSignViolation: return "stop-sign";
    case InfractionKind::RouteDeviation: return "route-deviation";
    case InfractionKind::AgentBlocked: return "agent-blocked";
  }
  return "unknown";
}

std::optional<InfractionKind> infraction_from_string(const std::string& name) {
  for (InfractionKind kind :
       {InfractionKind::CollisionPedestrian, InfractionKind::CollisionVehicle,
        InfractionKind::CollisionStatic, InfractionKind::RedLight,
        InfractionKind::StopSignViolation, InfractionKind::RouteDeviation,
        InfractionKind::AgentBlocked}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Completed: return "completed";
    case TerminationReason::Blocked: return "blocked";
    case TerminationReason::Deviated: return "deviated";
    case TerminationReason::Timeout: return "timeout";
    case TerminationReason::PlannerError: return "planner-error";
  }
  return "unknown";
}

namespace {

struct StagingContext {
  const VectorMap* map;
  const Route* route;
  const SimParams* params;
  int next_actor_id = 1;

  Vec2 anchor_point(double s) const { return route->point_at(s); }
  double anchor_heading(double s) const { return route->heading_at(s); }
};

Actor make_static_box(StagingContext& ctx, const Vec2& position, double heading, const Vec2& half) {
  Actor actor;
  actor.id = ctx.next_actor_id++;
  actor.kind = AgentKind::Static;
  actor.behavior = ActorBehavior::Static;
  actor.state = {position.x(), position.y(), heading, 0.0};
  actor.half = half;
  return actor;
}

Actor make_pedestrian(StagingContext& ctx, const Vec2& position, double walk_heading, double speed,
                      double distance, int delay_steps) {
  Actor actor;
  actor.id = ctx.next_actor_id++;
  actor.kind = AgentKind::Pedestrian;
  actor.behavior = ActorBehavior::ScriptedPath;
  actor.state = {position.x(), position.y(), walk_heading, 0.0};
  actor.half = {0.3, 0.3};
  actor.script_speed = speed;
  actor.script_distance = distance;
  actor.script_delay_steps = delay_steps;
  return actor;
}

Actor make_parked_vehicle(StagingContext& ctx, const Vec2& position, double heading) {
  Actor actor = make_static_box(ctx, position, heading, {2.4, 0.95});
  actor.kind = AgentKind::Vehicle;  // vehicle-shaped, collision counts as vehicle
  return actor;
}

// Oncoming lane closest to the anchor with travel direction opposing the
// route. Returns -1 when the map has none.
int find_oncoming_lane(const StagingContext& ctx, double anchor_s, double* lane_s_out) {
  const double heading = ctx.anchor_heading(anchor_s);
  const Vec2 anchor = ctx.anchor_point(anchor_s);
  int best = -1;
  double best_lateral = 15.0;
  for (const auto& lane : ctx.map->lanes) {
    double s, lateral;
    lane.project(anchor, s, lateral);
    if ((lane.point_at(s) - anchor).norm() > 12.0) continue;
    if (std::cos(angle_diff(lane.heading_at(s), heading)) > -0.5) continue;  // not opposing
    if (std::abs(lateral) < best_lateral) {
      best_lateral = std::abs(lateral);
      best = lane.id;
      if (lane_s_out) *lane_s_out = s;
    }
  }
  return best;
}

Actor make_oncoming_vehicle(StagingContext& ctx, double anchor_s, double approach_gap,
                            double speed) {
  double lane_s = 0.0;
  const int lane_id = find_oncoming_lane(ctx, anchor_s, &lane_s);
  if (lane_id < 0) {
    throw Error(ErrorKind::Placement, "scenario needs an oncoming lane near anchor s=" +
                                          std::to_string(anchor_s));
  }
  const auto& lane = ctx.map->lanes[static_cast<std::size_t>(lane_id)];
  Actor actor;
  actor.id = ctx.next_actor_id++;
  actor.kind = AgentKind::Vehicle;
  actor.behavior = ActorBehavior::IdmFollower;
  actor.lane = lane_id;
  actor.lane_s = std::max(0.0, lane_s - approach_gap);
  actor.half = {2.4, 0.95};
  const Vec2 p = lane.point_at(actor.lane_s);
  actor.state = {p.x(), p.y(), lane.heading_at(actor.lane_s), speed};
  actor.idm.desired_speed = std::max(speed, 1.0);
  return actor;
}

}  // namespace

SimWorld::SimWorld(std::shared_ptr<const VectorMap> map, std::shared_ptr<const Route> route,
                   const std::vector<ScenarioSpec>& specs, const SimParams& params)
    : map_(std::move(map)), route_(std::move(route)), params_(params) {
  if (!map_ || !route_ || route_->waypoints.size() < 2) {
    throw Error(ErrorKind::Placement, "world needs a map and a route with >= 2 waypoints");
  }

  const auto& start = route_->waypoints.front();
  ego_ = {start.position.x(), start.position.y(), start.heading, 0.0};

  StagingContext ctx{map_.get(), route_.get(), &params_};

  for (const ScenarioSpec& spec : specs) {
    if (!is_catalog_template(spec.template_name)) {
      throw Error(ErrorKind::Config, "unknown scenario template " + spec.template_name);
    }
    if (spec.anchor_s < 0.0 || spec.anchor_s > route_->length) {
      throw Error(ErrorKind::Placement, "scenario anchor s=" + std::to_string(spec.anchor_s) +
                                            " outside route [0, " +
                                            std::to_string(route_->length) + "]");
    }
    if (spec.trigger_distance <= 0.0) {
      throw Error(ErrorKind::Config, "trigger distance must be positive");
    }
    {
      // Anchor must lie in the drivable area.
      const Vec2 anchor = ctx.anchor_point(spec.anchor_s);
      const int lane = map_->nearest_lane(anchor);
      double s, lateral;
      if (lane < 0) throw Error(ErrorKind::Placement, "map has no lanes");
      map_->lanes[static_cast<std::size_t>(lane)].project(anchor, s, lateral);
      if ((map_->lanes[static_cast<std::size_t>(lane)].point_at(s) - anchor).norm() > 10.0) {
        throw Error(ErrorKind::Placement, "scenario anchor outside the drivable area");
      }
    }

    Trigger trigger;
    trigger.spec = spec;
    SplitMix64 rng(spec.seed);

    const double anchor_s = spec.anchor_s;
    const Vec2 anchor = ctx.anchor_point(anchor_s);
    const double heading = ctx.anchor_heading(anchor_s);
    const Vec2 n = left_normal(heading);
    const std::string& name = spec.template_name;

    const auto stage = [&](Actor actor) {
      actor.active = false;
      trigger.actor_ids.push_back(actor.id);
      actors_.push_back(std::move(actor));
    };

    if (name == "ControlLoss") {
      // Deterministic steering impulses shortly after the trigger fires.
      const int impulses = static_cast<int>(spec.param("impulses", 3));
      const double magnitude = spec.param("impulse_steer", 0.12);
      const int impulse_len = static_cast<int>(spec.param("impulse_steps", 6));
      int offset = static_cast<int>(spec.param("first_impulse_step", 8));
      trigger.noise_range.first = static_cast<int>(steer_noise_.size());
      for (int i = 0; i < impulses; ++i) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        for (int k = 0; k < impulse_len; ++k) {
          steer_noise_.push_back({offset + k, sign * magnitude});
        }
        offset += impulse_len + static_cast<int>(rng.uniform_int(20, 40));
      }
      trigger.noise_range.second = static_cast<int>(steer_noise_.size());
    } else if (name == "ParkingExit") {
      // Ego begins in a parallel bay beside the route start, boxed in by two
      // parked vehicles.
      const double bay_offset = spec.param("bay_offset", -3.1);
      const double gap_ahead = spec.param("gap_ahead", 9.0);
      const double gap_behind = spec.param("gap_behind", 7.0);
      const Vec2 start_pos = route_->waypoints.front().position;
      const double start_heading = route_->waypoints.front().heading;
      const Vec2 bn = left_normal(start_heading);
      const Vec2 bay = start_pos + bay_offset * bn;
      ego_ = {bay.x(), bay.y(), start_heading, 0.0};
      Actor front = make_parked_vehicle(
          ctx, Vec2(bay + gap_ahead * heading_vector(start_heading)), start_heading);
      front.active = true;
      actors_.push_back(front);
      Actor rear = make_parked_vehicle(
          ctx, Vec2(bay - gap_behind * heading_vector(start_heading)), start_heading);
      rear.active = true;
      actors_.push_back(rear);
      trigger.fired = true;  // nothing left to arm
    } else if (name == "SignalizedJunctionLeftTurn") {
      if (map_->lights.empty()) {
        throw Error(ErrorKind::Placement, "SignalizedJunctionLeftTurn needs a traffic light");
      }
      trigger.arms_light = true;
      trigger.light_id = map_->lights.front().control_id;
      trigger.light_red_s = spec.param("red_s", 6.0);
      stage(make_oncoming_vehicle(ctx, anchor_s, spec.param("oncoming_gap", 55.0),
                                  spec.param("oncoming_speed", 7.0)));
    } else if (name == "OppositeVehicleRunningRedLight") {
      // Ego keeps a green light; the adversary barrels through the junction.
      stage(make_oncoming_vehicle(ctx, anchor_s, spec.param("oncoming_gap", 40.0),
                                  spec.param("oncoming_speed", 9.0)));
    } else if (name == "ConstructionObstacle") {
      const int count = static_cast<int>(spec.param("count", 3));
      const double spacing = spec.param("spacing", 3.5);
      const double lateral = spec.param("lateral_offset", 0.0);
      for (int i = 0; i < count; ++i) {
        const double s = std::min(anchor_s + i * spacing, route_->length);
        const Vec2 p = route_->point_at(s) + lateral * left_normal(route_->heading_at(s));
        stage(make_static_box(ctx, p, route_->heading_at(s),
                              {spec.param("box_half_length", 1.0), spec.param("box_half_width", 1.0)}));
      }
    } else if (name == "ParkedObstacleTwoWays") {
      const double lateral = spec.param("lateral_offset", -0.6);
      stage(make_parked_vehicle(ctx, Vec2(anchor + lateral * n), heading));
      stage(make_oncoming_vehicle(ctx, anchor_s, spec.param("oncoming_gap", 70.0),
                                  spec.param("oncoming_speed", 8.0)));
    } else if (name == "HazardAtSideLane") {
      // Slow riders hugging the lane edge ahead of the anchor.
      const double speed = spec.param("hazard_speed", 2.0);
      const double lateral = spec.param("lateral_offset", 1.4);
      for (int i = 0; i < 2; ++i) {
        const double s = anchor_s + i * spec.param("spacing", 6.0);
        const Vec2 p = route_->point_at(s) + lateral * left_normal(route_->heading_at(s));
        Actor rider;
        rider.id = ctx.next_actor_id++;
        rider.kind = AgentKind::Vehicle;
        rider.behavior = ActorBehavior::ScriptedPath;
        rider.state = {p.x(), p.y(), route_->heading_at(s), 0.0};
        rider.half = {0.9, 0.4};
        rider.script_speed = speed;
        rider.script_distance = spec.param("hazard_distance", 120.0);
        stage(std::move(rider));
      }
    } else if (name == "VehicleOpensDoorTwoWays") {
      const double lateral = spec.param("lateral_offset", -2.3);
      Actor parked = make_parked_vehicle(ctx, Vec2(anchor + lateral * n), heading);
      parked.active = true;  // the car is always there, the door pops open
      actors_.push_back(parked);
      const Vec2 door_pos = anchor + (lateral + 1.35) * n + 1.0 * heading_vector(heading);
      stage(make_static_box(ctx, door_pos, heading, {0.6, 0.55}));
      stage(make_oncoming_vehicle(ctx, anchor_s, spec.param("oncoming_gap", 70.0),
                                  spec.param("oncoming_speed", 8.0)));
    } else if (name == "DynamicObjectCrossing" || name == "VehicleTurningRoutePedestrian") {
      const double side = spec.param("side_offset", -5.5);
      const double speed = spec.param("walk_speed", 1.5);
      const double distance = spec.param("walk_distance", 12.0);
      const int delay = static_cast<int>(spec.param("delay_steps", 0));
      const double walk_heading = wrap_angle(heading + (side < 0 ? kPi / 2.0 : -kPi / 2.0));
      stage(make_pedestrian(ctx, Vec2(anchor + side * n), walk_heading, speed, distance, delay));
    }

    triggers_.push_back(std::move(trigger));
  }

  // Actor ids are assigned sequentially, so uniqueness is structural; verify
  // anyway to keep the invariant explicit.
  for (std::size_t i = 0; i < actors_.size(); ++i) {
    for (std::size_t j = i + 1; j < actors_.size(); ++j) {
      if (actors_[i].id == actors_[j].id) {
        throw Error(ErrorKind::Config, "duplicate actor id");
      }
    }
  }

  sign_min_speed_.clear();
  sign_crossed_.clear();
  for (const auto& line : map_->stop_lines) {
    if (line.kind != mapkit::ControlKind::StopSign) continue;
    StopSign sign;
    sign.control_id = line.control_id;
    sign.line_a = line.a;
    sign.line_b = line.b;
    double s, lateral;
    route_->project(0.5 * (line.a + line.b), s, lateral);
    sign.on_route = std::abs(lateral) < 3.0;
    sign.route_s = s;
    stop_signs_.push_back(sign);
    sign_min_speed_.push_back(std::numeric_limits<double>::infinity());
    sign_crossed_.push_back(false);
  }
  for (const auto& anchor : map_->lights) {
    TrafficLight light;
    light.control_id = anchor.control_id;
    light.position = anchor.position;
    for (const auto& line : map_->stop_lines) {
      if (line.control_id == anchor.control_id) {
        light.line_a = line.a;
        light.line_b = line.b;
        double s, lateral;
        route_->project(0.5 * (line.a + line.b), s, lateral);
        light.on_route = std::abs(lateral) < 3.0;
        light.route_s = s;
        break;
      }
    }
    lights_.push_back(light);
  }

  double s0, l0;
  route_->project(ego_.position(), s0, l0);
  progress_ = std::min(s0, route_->length);
  lateral_ = l0;
  fire_triggers();
}

void SimWorld::fire_triggers() {
  for (Trigger& trigger : triggers_) {
    if (trigger.fired) continue;
    if (progress_ < trigger.spec.anchor_s - trigger.spec.trigger_distance) continue;
    trigger.fired = true;
    for (int id : trigger.actor_ids) {
      for (Actor& actor : actors_) {
        if (actor.id == id) {
          actor.active = true;
          actor.activation_step = clock_;
        }
      }
    }
    if (trigger.arms_light) {
      for (TrafficLight& light : lights_) {
        if (light.control_id == trigger.light_id) {
          light.red_from_step = clock_;
          light.red_until_step =
              clock_ + static_cast<int>(std::round(trigger.light_red_s / params_.dt));
        }
      }
    }
    // Control-loss impulse offsets were recorded relative to activation.
    for (int i = trigger.noise_range.first; i < trigger.noise_range.second; ++i) {
      steer_noise_[static_cast<std::size_t>(i)].first += clock_;
    }
  }
}

double SimWorld::steer_noise_at(int step) const {
  double total = 0.0;
  for (const auto& [noise_step, value] : steer_noise_) {
    if (noise_step == step) total += value;
  }
  return total;
}

const Actor* SimWorld::find_leader(const Actor& follower, double* gap_out) const {
  if (follower.lane < 0) return nullptr;
  const auto& lane = map_->lanes[static_cast<std::size_t>(follower.lane)];
  const Actor* leader = nullptr;
  double best_gap = 60.0;

  const auto consider = [&](const Vec2& pos, double half_len, const Actor* candidate) {
    double s, lateral;
    lane.project(pos, s, lateral);
    if (std::abs(lateral) > 2.0) return;
    if ((lane.point_at(s) - pos).norm() > 8.0) return;
    const double gap = s - follower.lane_s - follower.half.x() - half_len;
    if (gap > 0.05 && gap < best_gap) {
      best_gap = gap;
      leader = candidate;
    }
  };

  for (const Actor& other : actors_) {
    if (other.id == follower.id || !other.active) continue;
    consider(other.state.position(), other.half.x(), &other);
  }
  // A sentinel actor stands in for the ego.
  static const Actor ego_sentinel = [] {
    Actor a;
    a.id = 0;
    return a;
  }();
  consider(ego_.position(), params_.ego_half.x(), &ego_sentinel);

  if (gap_out) *gap_out = best_gap;
  return leader;
}

void SimWorld::advance_actor(Actor& actor) {
  if (!actor.active) return;
  switch (actor.behavior) {
    case ActorBehavior::Static:
      return;
    case ActorBehavior::IdmFollower: {
      double gap = std::numeric_limits<double>::infinity();
      const Actor* leader = find_leader(actor, &gap);
      double leader_speed = 0.0;
      if (leader) {
        leader_speed = leader->id == 0 ? ego_.v : leader->state.v;
      } else {
        gap = std::numeric_limits<double>::infinity();
      }
      const double accel = idm_accel(actor.state.v, gap, leader_speed, actor.idm);
      actor.last_control = {0.0, accel};
      actor.state.v = std::max(0.0, actor.state.v + accel * params_.dt);
      actor.lane_s += actor.state.v * params_.dt;

      const auto* lane = &map_->lanes[static_cast<std::size_t>(actor.lane)];
      while (actor.lane_s > lane->length && !lane->successors.empty()) {
        actor.lane_s -= lane->length;
        actor.lane = lane->successors.front();
        lane = &map_->lanes[static_cast<std::size_t>(actor.lane)];
      }
      actor.lane_s = std::min(actor.lane_s, lane->length);
      const Vec2 p = lane->point_at(actor.lane_s);
      actor.state.x = p.x();
      actor.state.y = p.y();
      actor.state.psi = lane->heading_at(actor.lane_s);
      return;
    }
    case ActorBehavior::ScriptedPath: {
      const int since_activation = clock_ - actor.activation_step;
      if (since_activation < actor.script_delay_steps) return;
      if (actor.script_traveled >= actor.script_distance) {
        actor.state.v = 0.0;
        return;
      }
      actor.state.v = actor.script_speed;
      const double ds = actor.script_speed * params_.dt;
      actor.state.x += ds * std::cos(actor.state.psi);
      actor.state.y += ds * std::sin(actor.state.psi);
      actor.script_traveled += ds;
      return;
    }
  }
}

void SimWorld::detect_infractions(const Vec2& prev_ego_pos, std::vector<InfractionEvent>& out) {
  const OrientedBox ego_box{ego_.position(), ego_.psi, params_.ego_half};

  // Collisions, one event per contact episode.
  std::vector<int> now_in_contact;
  for (const Actor& actor : actors_) {
    if (!actor.active) continue;
    if (!boxes_overlap(ego_box, actor.box())) continue;
    now_in_contact.push_back(actor.id);
    const bool was_in_contact =
        std::find(contact_actors_.begin(), contact_actors_.end(), actor.id) !=
        contact_actors_.end();
    if (was_in_contact) continue;
    InfractionEvent event;
    event.kind = actor.kind == AgentKind::Pedestrian ? InfractionKind::CollisionPedestrian
                 : actor.kind == AgentKind::Static   ? InfractionKind::CollisionStatic
                                                     : InfractionKind::CollisionVehicle;
    event.step = clock_;
    event.position = ego_.position();
    event.actor_id = actor.id;
    out.push_back(event);
  }
  contact_actors_ = std::move(now_in_contact);

  // Stop-line crossings.
  for (TrafficLight& light : lights_) {
    if (!light.on_route) continue;
    if (segments_intersect(prev_ego_pos, ego_.position(), light.line_a, light.line_b) &&
        light.phase_at(clock_) == LightPhase::Red) {
      out.push_back({InfractionKind::RedLight, clock_, ego_.position(), -1});
    }
  }
  for (std::size_t i = 0; i < stop_signs_.size(); ++i) {
    const StopSign& sign = stop_signs_[i];
    if (!sign.on_route || sign_crossed_[i]) continue;
    if (progress_ > sign.route_s - 10.0 && progress_ < sign.route_s) {
      sign_min_speed_[i] = std::min(sign_min_speed_[i], ego_.v);
    }
    if (segments_intersect(prev_ego_pos, ego_.position(), sign.line_a, sign.line_b)) {
      sign_crossed_[i] = true;
      if (sign_min_speed_[i] > 0.1) {
        out.push_back({InfractionKind::StopSignViolation, clock_, ego_.position(), -1});
      }
    }
  }

  if (std::abs(lateral_) > params_.deviation_threshold_m) {
    out.push_back({InfractionKind::RouteDeviation, clock_, ego_.position(), -1});
    terminate(TerminationReason::Deviated);
  }

  blocked_steps_ = ego_.v < 0.1 ? blocked_steps_ + 1 : 0;
  if (!terminated_ &&
      blocked_steps_ >= static_cast<int>(std::round(params_.block_timeout_s / params_.dt))) {
    out.push_back({InfractionKind::AgentBlocked, clock_, ego_.position(), -1});
    terminate(TerminationReason::Blocked);
  }
}

std::vector<InfractionEvent> SimWorld::step(const ControlInput& ego_control) {
  if (terminated_) {
    throw Error(ErrorKind::Lifecycle, "step() after termination (" +
                                          std::string(to_string(reason_)) + ")");
  }

  ControlInput control = ego_control;
  control.steer += steer_noise_at(clock_);

  const Vec2 prev_pos = ego_.position();
  ego_ = bicycle_step(ego_, control, params_.dt, params_.vehicle);
  for (Actor& actor : actors_) advance_actor(actor);

  double s_raw, lateral;
  route_->project(ego_.position(), s_raw, lateral);
  lateral_ = lateral;
  progress_ = std::max(progress_, std::min(s_raw, route_->length));

  std::vector<InfractionEvent> events;
  detect_infractions(prev_pos, events);

  if (!terminated_ && progress_ >= route_->length - params_.completion_tolerance_m) {
    progress_ = route_->length;
    terminate(TerminationReason::Completed);
  }

  fire_triggers();
  for (const InfractionEvent& e : events) events_.push_back(e);
  ++clock_;
  return events;
}

void SimWorld::terminate(TerminationReason reason) {
  if (terminated_) return;
  terminated_ = true;
  reason_ = reason;
}

Observation SimWorld::observe() const {
  Observation obs;
  obs.step = clock_;
  obs.dt = params_.dt;
  obs.ego = ego_;
  obs.ego_half = params_.ego_half;
  obs.progress_s = progress_;
  obs.lateral_offset = lateral_;
  obs.route = route_.get();
  obs.map = map_.get();
  for (const Actor& actor : actors_) {
    if (!actor.active) continue;
    obs.actors.push_back(
        {actor.id, actor.kind, actor.behavior, actor.state, actor.half, actor.last_control});
  }
  for (const TrafficLight& light : lights_) {
    obs.lights.push_back({light.control_id, light.position, light.phase_at(clock_), light.line_a,
                          light.line_b, light.route_s, light.on_route});
  }
  for (const StopSign& sign : stop_signs_) {
    obs.stop_signs.push_back({sign.control_id, sign.line_a, sign.line_b, sign.route_s,
                              sign.on_route});
  }
  return obs;
}

std::string SimWorld::describe() const {
  std::ostringstream out;
  const auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v == 0.0 ? 0.0 : v);
    return std::string(buf);
  };
  out << "world clock=" << clock_ << " progress=" << num(progress_)
      << " ego=" << num(ego_.x) << "," << num(ego_.y) << "," << num(ego_.psi) << ","
      << num(ego_.v) << " terminated=" << terminated_ << "\n";
  for (const Actor& a : actors_) {
    out << "actor id=" << a.id << " kind=" << static_cast<int>(a.kind)
        << " behavior=" << static_cast<int>(a.behavior) << " active=" << a.active << " state="
        << num(a.state.x) << "," << num(a.state.y) << "," << num(a.state.psi) << ","
        << num(a.state.v) << " half=" << num(a.half.x()) << "," << num(a.half.y())
        << " lane=" << a.lane << " lane_s=" << num(a.lane_s) << "\n";
  }
  for (const TrafficLight& l : lights_) {
    out << "light id=" << l.control_id << " red_from=" << l.red_from_step
        << " red_until=" << l.red_until_step << "\n";
  }
  for (const auto& [step, value] : steer_noise_) {
    out << "noise step=" << step << " steer=" << num(value) << "\n";
  }
  return out.str();
}

SimWorld load_scenario(const ScenarioSpec& spec, std::shared_ptr<const VectorMap> map,
                       std::shared_ptr<const Route> route, const SimParams& params) {
  return SimWorld(std::move(map), std::move(route), {spec}, params);
}

}  // namespace adbench::sim
