#pragma once

#include <memory>
#include <string>
#include <vector>

#include "adbench/mapkit/route.hpp"
#include "adbench/models.hpp"
#include "adbench/predict.hpp"
#include "adbench/sim/world.hpp"

namespace adbench::planner {

using mapkit::Route;
using mapkit::RouteWaypoint;
using sim::Observation;

struct RulePlannerConfig {
  double speed_cap_factor = 0.72;        // fraction of the speed limit
  double clearance = 0.5;                // m, lateral margin on detours
  double lookahead_min = 3.0;            // m
  double lookahead_time = 0.5;           // s, lookahead = max(min, time * v)
  double detection_range = 45.0;         // m, obstacle and leader search
  double corridor_halfwidth = 1.9;       // m, lateral band that counts as "ahead of us"
  double slow_obstacle_speed = 3.0;      // m/s, slower actors are detour candidates
  double detour_ramp = 12.0;             // m, cosine ramp length
  double detour_pad = 1.5;               // m, plateau padding past the obstacle
  double group_merge_gap = 8.0;          // m, obstacles closer than this share one detour
  double forecast_horizon = 2.0;         // s
  double forecast_dt = 0.05;             // s
  double idm_candidate_horizon = 0.6;    // s, target = v + idm_accel * horizon
  double vehicle_inflation = 2.0;
  double pedestrian_inflation = 2.0;
  double ego_inflation = 1.3;
  double throttle_accel_gain = 2.5;      // m/s^2 at full throttle
  double brake_accel_gain = 6.0;         // m/s^2 at full brake
  double max_lateral_accel = 2.5;        // m/s^2, curvature slowdown (0 disables)
  double stop_zone_length = 6.0;         // m before a stop line that counts as "at the sign"
  double max_lateral_fallback = 5.25;    // m, detour room when the map lookup fails
  BicycleParams vehicle;
  Vec2 ego_half{2.4, 1.0};
  IdmParams idm;
  PidGains pid;
  LongitudinalParams longitudinal;
};

struct DetourWindow {
  bool active = false;
  int obstacle_id = -1;       // representative actor id
  double begin_s = 0.0;       // replaced interval on the base route
  double end_s = 0.0;
  double peak_offset = 0.0;   // signed, positive = left
};

struct RulePlannerState {
  DetourWindow detour;
  PidState pid;
  double last_target_speed = 0.0;
  std::vector<std::string> satisfied_signs;
};

// Inserts a cosine-smooth lateral detour into a route slice around an
// obstacle footprint. The slice must extend past the obstacle by at least the
// ramp length on both sides; end points and end headings are preserved.
// side = +1 detours left, -1 right. available_offset is the lateral room on
// that side; throws ErrorKind::InfeasibleDetour when the required offset does
// not fit. Returns the slice unchanged when the footprint does not overlap
// the swept corridor.
std::vector<RouteWaypoint> cosine_detour(const std::vector<RouteWaypoint>& slice,
                                         const std::vector<double>& slice_s,
                                         const OrientedBox& footprint, double clearance,
                                         double ego_half_width, double ramp_length, int side,
                                         double available_offset);

// Rule-based planner driving from the privileged observation: detour-modified
// route, IDM target speed capped at a fraction of the speed limit,
// forecast-gated collision avoidance, velocity-scaled PID steering and the
// saturating regression longitudinal controller.
class RulePlanner {
 public:
  explicit RulePlanner(std::shared_ptr<const Route> route, RulePlannerConfig config = {});

  ControlInput plan(const Observation& obs);

  const RulePlannerState& state() const { return state_; }
  const Route& working_route() const { return working_route_; }
  double last_target_speed() const { return state_.last_target_speed; }

 private:
  struct ObstacleGroup {
    double begin_s = 0.0;
    double end_s = 0.0;
    double required_left = 0.0;   // peak offset needed for a left detour
    double required_right = 0.0;  // and for a right detour
    int representative = -1;
  };

  void refresh_detour(const Observation& obs, double ego_s);
  double target_speed(const Observation& obs, double ego_s) const;
  double available_offset(const Observation& obs, double s, int side) const;

  std::shared_ptr<const Route> base_route_;
  Route working_route_;
  RulePlannerConfig config_;
  RulePlannerState state_;
};

}  // namespace adbench::planner
