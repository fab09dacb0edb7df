#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adbench/geometry.hpp"
#include "adbench/mapkit/opendrive.hpp"

namespace adbench::mapkit {

struct MapPoint {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;  // travel direction
  double width = 0.0;
};

enum class ControlKind { TrafficLight, StopSign };

// One directed lane: centerline samples ordered along the travel direction.
struct VmLane {
  int id = -1;                 // dense index into VectorMap::lanes
  std::string key;             // "road:section:lane", stable across builds
  std::vector<MapPoint> points;
  std::vector<double> cum_s;   // arc length per point, cum_s[0] == 0
  double length = 0.0;
  double speed_limit = 13.89;
  std::vector<int> successors;  // lane ids
  int left_neighbor = -1;       // same-direction adjacent lanes, -1 = none
  int right_neighbor = -1;

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  // Arc-length position of the closest centerline point, plus the lateral
  // offset (positive left of travel).
  void project(const Vec2& p, double& s_out, double& lateral_out) const;
};

struct StopLine {
  std::string control_id;
  ControlKind kind = ControlKind::TrafficLight;
  int lane = -1;
  double s_on_lane = 0.0;
  Vec2 a{0.0, 0.0};  // endpoints across the lane
  Vec2 b{0.0, 0.0};
};

struct LightAnchor {
  std::string control_id;
  Vec2 position{0.0, 0.0};
  std::vector<int> lanes;
};

struct CrosswalkPolygon {
  std::vector<Vec2> corners;  // 4 points, counter-clockwise
};

struct VectorMap {
  std::vector<VmLane> lanes;
  std::vector<StopLine> stop_lines;
  std::vector<LightAnchor> lights;
  std::vector<CrosswalkPolygon> crosswalks;
  double spacing = 0.5;

  const VmLane* lane_by_key(const std::string& key) const;
  // Lane whose centerline is closest to p (projected laterally); -1 if none.
  int nearest_lane(const Vec2& p) const;
};

inline constexpr double kDefaultSpeedLimit = 13.89;  // 50 km/h
inline constexpr double kLinkContinuityTolerance = 0.5;

// Samples every driving lane at <= spacing along arc length, resolves lane
// topology (successors and same-direction neighbors) and places stop lines,
// light anchors and crosswalk polygons.
VectorMap build_vector_map(const RoadNetwork& network, double spacing = 0.5,
                           double default_speed_limit = kDefaultSpeedLimit);

// Versioned field-named text serialization (schema in the README).
void write_vector_map(std::ostream& out, const VectorMap& map);
std::string serialize_vector_map(const VectorMap& map);

}  // namespace adbench::mapkit
