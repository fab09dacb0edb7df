#pragma once

#include <string>
#include <vector>

#include "adbench/geometry.hpp"

namespace adbench::mapkit {

enum class GeometryKind { Line, Arc };

// One reference-line segment. Arcs store a non-zero curvature (positive =
// left turn).
struct GeometrySegment {
  GeometryKind kind = GeometryKind::Line;
  double s = 0.0;        // start offset along the reference line
  Vec2 origin{0.0, 0.0};
  double heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;

  // Pose at local arc length ds in [0, length], closed form for both kinds.
  Vec2 point_at(double ds) const;
  double heading_at(double ds) const;
};

// Cubic width record: width(ds) = a + b*ds + c*ds^2 + d*ds^3 with ds measured
// from s_offset within the lane section.
struct WidthPoly {
  double s_offset = 0.0;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  double eval(double ds) const { return a + ds * (b + ds * (c + ds * d)); }
};

struct LaneLink {
  bool has_predecessor = false;
  int predecessor = 0;
  bool has_successor = false;
  int successor = 0;
};

struct Lane {
  int id = 0;                    // OpenDRIVE convention: negative right of the reference line
  std::string type = "driving";
  std::vector<WidthPoly> widths;
  LaneLink link;

  bool driving() const { return type == "driving"; }
  double width_at(double section_ds) const;
};

struct LaneSection {
  double s = 0.0;
  std::vector<Lane> left;   // ids +1, +2, ... ordered outward
  std::vector<Lane> right;  // ids -1, -2, ... ordered outward

  const Lane* lane(int id) const;
};

struct RoadLink {
  bool valid = false;
  int road_id = -1;
  bool contact_start = true;  // contact point on the linked road
};

struct TrafficControl {
  enum class Kind { TrafficLight, StopSign };
  Kind kind = Kind::TrafficLight;
  std::string id;
  int road_id = -1;
  double s = 0.0;
  double t = 0.0;               // lateral anchor offset
  std::vector<int> lane_ids;    // controlled lanes on the road
};

struct CrosswalkObject {
  int road_id = -1;
  double s = 0.0;
  double t = 0.0;
  double length = 4.0;  // extent along the road
  double width = 4.0;   // extent across
};

struct Road {
  int id = -1;
  std::string name;
  double length = 0.0;
  RoadLink predecessor;
  RoadLink successor;
  std::vector<GeometrySegment> geometry;
  std::vector<LaneSection> sections;
  double speed_limit = 0.0;  // 0 = unspecified
};

struct RoadNetwork {
  std::vector<Road> roads;
  std::vector<TrafficControl> controls;
  std::vector<CrosswalkObject> crosswalks;

  const Road* road(int id) const;
};

// Parses the supported OpenDRIVE subset: line/arc reference geometry, cubic
// lane widths, lane and road links, signals and crosswalk objects. Unsupported
// reference-line kinds (spiral, poly3, ...) raise ErrorKind::Unsupported;
// dangling links raise ErrorKind::Topology.
RoadNetwork parse_opendrive(std::string_view document);

RoadNetwork load_opendrive_file(const std::string& path);

// Reads a whole file into a string (throws ErrorKind::Io).
std::string read_text_file(const std::string& path);

}  // namespace adbench::mapkit
