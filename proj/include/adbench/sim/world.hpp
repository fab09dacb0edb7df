#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adbench/geometry.hpp"
#include "adbench/mapkit/route.hpp"
#include "adbench/mapkit/vector_map.hpp"
#include "adbench/models.hpp"
#include "adbench/predict.hpp"
#include "adbench/sim/scenario.hpp"

namespace adbench::sim {

using mapkit::Route;
using mapkit::VectorMap;

struct SimParams {
  double dt = 0.05;                    // 20 Hz fixed step
  double block_timeout_s = 90.0;
  double deviation_threshold_m = 15.0;
  double completion_tolerance_m = 2.0;
  BicycleParams vehicle;
  Vec2 ego_half{2.4, 1.0};
};

enum class ActorBehavior { IdmFollower, ScriptedPath, Static };

struct Actor {
  int id = -1;
  AgentKind kind = AgentKind::Vehicle;
  ActorBehavior behavior = ActorBehavior::Static;
  EgoState state;
  Vec2 half{2.4, 1.0};
  bool active = false;
  int activation_step = -1;

  // idm-follower
  int lane = -1;
  double lane_s = 0.0;
  IdmParams idm;

  // scripted-path
  double script_speed = 0.0;
  double script_distance = 0.0;
  double script_traveled = 0.0;
  int script_delay_steps = 0;

  ControlInput last_control;

  OrientedBox box() const { return {state.position(), state.psi, half}; }
};

enum class LightPhase { Red, Yellow, Green };

struct TrafficLight {
  std::string control_id;
  Vec2 position{0.0, 0.0};
  Vec2 line_a{0.0, 0.0};
  Vec2 line_b{0.0, 0.0};
  double route_s = -1.0;  // arc position where the stop line crosses the route
  bool on_route = false;

  // Schedule: green by default; a scenario trigger can hold it red for a
  // window of steps.
  int red_from_step = -1;
  int red_until_step = -1;

  LightPhase phase_at(int step) const {
    if (red_from_step >= 0 && step >= red_from_step && step < red_until_step) {
      return LightPhase::Red;
    }
    return LightPhase::Green;
  }
};

struct StopSign {
  std::string control_id;
  Vec2 line_a{0.0, 0.0};
  Vec2 line_b{0.0, 0.0};
  double route_s = -1.0;
  bool on_route = false;
};

enum class InfractionKind {
  CollisionPedestrian,
  CollisionVehicle,
  CollisionStatic,
  RedLight,
  StopSignViolation,
  RouteDeviation,
  AgentBlocked,
};

const char* to_string(InfractionKind kind);
std::optional<InfractionKind> infraction_from_string(const std::string& name);

struct InfractionEvent {
  InfractionKind kind = InfractionKind::CollisionVehicle;
  int step = 0;
  Vec2 position{0.0, 0.0};
  int actor_id = -1;  // collisions only
};

struct ObservedActor {
  int id = -1;
  AgentKind kind = AgentKind::Vehicle;
  ActorBehavior behavior = ActorBehavior::Static;
  EgoState state;
  Vec2 half{0.0, 0.0};
  ControlInput control;
};

struct ObservedLight {
  std::string id;
  Vec2 position{0.0, 0.0};
  LightPhase phase = LightPhase::Green;
  Vec2 line_a{0.0, 0.0};
  Vec2 line_b{0.0, 0.0};
  double route_s = -1.0;
  bool on_route = false;
};

struct ObservedStopSign {
  std::string id;
  Vec2 line_a{0.0, 0.0};
  Vec2 line_b{0.0, 0.0};
  double route_s = -1.0;
  bool on_route = false;
};

// Privileged ground-truth view handed to planners. Pointers reference the
// world and stay valid for the duration of the callback.
struct Observation {
  int step = 0;
  double dt = 0.05;
  EgoState ego;
  Vec2 ego_half{2.4, 1.0};
  double progress_s = 0.0;
  double lateral_offset = 0.0;
  const Route* route = nullptr;
  const VectorMap* map = nullptr;
  std::vector<ObservedActor> actors;
  std::vector<ObservedLight> lights;
  std::vector<ObservedStopSign> stop_signs;
};

enum class TerminationReason { Completed, Blocked, Deviated, Timeout, PlannerError };

const char* to_string(TerminationReason reason);

// Deterministic fixed-step closed-loop world. Owns the staged scenario
// actors; identical (specs, map, route, seed) builds are identical worlds.
class SimWorld {
 public:
  SimWorld(std::shared_ptr<const VectorMap> map, std::shared_ptr<const Route> route,
           const std::vector<ScenarioSpec>& specs, const SimParams& params = {});

  Observation observe() const;

  // Advances everything by one step and returns the new infractions.
  std::vector<InfractionEvent> step(const ControlInput& ego_control);

  bool terminated() const { return terminated_; }
  TerminationReason termination_reason() const { return reason_; }
  void terminate(TerminationReason reason);

  int clock() const { return clock_; }
  double progress() const { return progress_; }
  double dt() const { return params_.dt; }
  const SimParams& params() const { return params_; }
  const Route& route() const { return *route_; }
  const VectorMap& map() const { return *map_; }
  const EgoState& ego() const { return ego_; }
  const std::vector<Actor>& actors() const { return actors_; }
  const std::vector<InfractionEvent>& events() const { return events_; }
  const std::vector<TrafficLight>& lights() const { return lights_; }

  // Steering perturbation applied at the given step (control-loss scenarios).
  double steer_noise_at(int step) const;

  // Debug/determinism snapshot of the full mutable state.
  std::string describe() const;

 private:
  struct Trigger {
    ScenarioSpec spec;
    bool fired = false;
    std::vector<int> actor_ids;
    bool arms_light = false;
    std::string light_id;
    double light_red_s = 6.0;
    // control-loss impulses owned by this trigger, as [begin, end) into
    // steer_noise_; offsets are trigger-relative until the trigger fires
    std::pair<int, int> noise_range{0, 0};
  };

  void fire_triggers();
  void advance_actor(Actor& actor);
  const Actor* find_leader(const Actor& follower, double* gap_out) const;
  void detect_infractions(const Vec2& prev_ego_pos, std::vector<InfractionEvent>& out);

  std::shared_ptr<const VectorMap> map_;
  std::shared_ptr<const Route> route_;
  SimParams params_;
  EgoState ego_;
  std::vector<Actor> actors_;
  std::vector<TrafficLight> lights_;
  std::vector<StopSign> stop_signs_;
  std::vector<Trigger> triggers_;
  std::vector<std::pair<int, double>> steer_noise_;  // (step, added steer)

  int clock_ = 0;
  double progress_ = 0.0;
  double lateral_ = 0.0;
  bool terminated_ = false;
  TerminationReason reason_ = TerminationReason::Timeout;
  int blocked_steps_ = 0;
  std::vector<int> contact_actors_;            // actors currently overlapping the ego
  std::vector<double> sign_min_speed_;         // per stop sign, min speed in approach window
  std::vector<bool> sign_crossed_;
  std::vector<InfractionEvent> events_;
};

// Stages one scenario on a route (ego at the route start). Convenience
// wrapper over the multi-scenario constructor.
SimWorld load_scenario(const ScenarioSpec& spec, std::shared_ptr<const VectorMap> map,
                       std::shared_ptr<const Route> route, const SimParams& params = {});

}  // namespace adbench::sim
