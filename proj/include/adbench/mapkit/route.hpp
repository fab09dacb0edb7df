#pragma once

#include <string>
#include <vector>

#include "adbench/geometry.hpp"
#include "adbench/mapkit/vector_map.hpp"

namespace adbench::mapkit {

struct RouteWaypoint {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;
  double speed_limit = 13.89;
};

// Ordered waypoints with strictly increasing arc length.
struct Route {
  std::vector<RouteWaypoint> waypoints;
  std::vector<double> s;  // cumulative arc length, s[0] == 0
  double length = 0.0;

  Vec2 point_at(double arc) const;
  double heading_at(double arc) const;
  double speed_limit_at(double arc) const;
  // Arc-length of the closest point on the route plus lateral offset
  // (positive left of travel).
  void project(const Vec2& p, double& s_out, double& lateral_out) const;

  // First waypoint index with s >= arc.
  std::size_t index_at(double arc) const;

  static Route from_waypoints(std::vector<RouteWaypoint> wps);
};

// Follows lane centerlines from (start lane, start s) to (goal lane, goal s).
// Lane changes jump to the neighbor lane at a sample boundary. Throws
// ErrorKind::NoRoute listing the reachable component when the goal is not
// connected.
Route extract_route(const VectorMap& map, int start_lane, double start_s, int goal_lane,
                    double goal_s);

Route extract_route(const VectorMap& map, const std::string& start_key, double start_s,
                    const std::string& goal_key, double goal_s);

}  // namespace adbench::mapkit
