#include "adbench/mapkit/vector_map.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "adbench/error.hpp"

namespace adbench::mapkit {

namespace {

std::string lane_key(int road, int section, int lane) {
  return std::to_string(road) + ":" + std::to_string(section) + ":" + std::to_string(lane);
}

// Reference-line lookup across a road's geometry segments.
struct RefLine {
  const Road* road;

  const GeometrySegment& segment_at(double s) const {
    const GeometrySegment* active = &road->geometry.front();
    for (const GeometrySegment& g : road->geometry) {
      if (g.s <= s + 1e-9) active = &g;
    }
    return *active;
  }

  Vec2 point(double s) const {
    const GeometrySegment& g = segment_at(s);
    return g.point_at(std::clamp(s - g.s, 0.0, g.length));
  }

  double heading(double s) const {
    const GeometrySegment& g = segment_at(s);
    return g.heading_at(std::clamp(s - g.s, 0.0, g.length));
  }
};

// Signed lateral offset of a lane's centerline: half of its own width plus
// the full widths of every lane between it and the reference line.
double center_offset(const LaneSection& section, int lane_id, double section_ds) {
  double accumulated = 0.0;
  if (lane_id > 0) {
    for (const Lane& l : section.left) {
      if (l.id < lane_id) accumulated += l.width_at(section_ds);
      if (l.id == lane_id) return accumulated + 0.5 * l.width_at(section_ds);
    }
  } else {
    for (const Lane& l : section.right) {
      if (l.id > lane_id) accumulated += l.width_at(section_ds);
      if (l.id == lane_id) return -(accumulated + 0.5 * l.width_at(section_ds));
    }
  }
  throw Error(ErrorKind::Topology, "lane " + std::to_string(lane_id) + " not in section");
}

struct PendingLink {
  int from_index;
  int to_road;
  int to_lane;
};

void append_format(std::string& out, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  out += buf;
}

std::string format_number(double v) {
  std::string s;
  append_format(s, "%.9g", v == 0.0 ? 0.0 : v);  // normalize -0
  return s;
}

}  // namespace

Vec2 VmLane::point_at(double s) const {
  if (points.empty()) return {0.0, 0.0};
  s = std::clamp(s, 0.0, length);
  const auto it = std::upper_bound(cum_s.begin(), cum_s.end(), s);
  if (it == cum_s.begin()) return points.front().position;
  if (it == cum_s.end()) return points.back().position;
  const std::size_t hi = static_cast<std::size_t>(it - cum_s.begin());
  const std::size_t lo = hi - 1;
  const double seg = cum_s[hi] - cum_s[lo];
  const double t = seg > 0.0 ? (s - cum_s[lo]) / seg : 0.0;
  return points[lo].position + t * (points[hi].position - points[lo].position);
}

double VmLane::heading_at(double s) const {
  if (points.empty()) return 0.0;
  s = std::clamp(s, 0.0, length);
  const auto it = std::upper_bound(cum_s.begin(), cum_s.end(), s);
  const std::size_t idx = it == cum_s.begin() ? 0 : static_cast<std::size_t>(it - cum_s.begin()) - 1;
  return points[std::min(idx, points.size() - 1)].heading;
}

void VmLane::project(const Vec2& p, double& s_out, double& lateral_out) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  s_out = 0.0;
  lateral_out = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Vec2& a = points[i].position;
    const Vec2& b = points[i + 1].position;
    const Vec2 q = closest_point_on_segment(a, b, p);
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      const double seg_len = (b - a).norm();
      const double t = seg_len > 0.0 ? (q - a).norm() / seg_len : 0.0;
      s_out = cum_s[i] + t * (cum_s[i + 1] - cum_s[i]);
      const Vec2 n = left_normal(points[i].heading);
      lateral_out = (p - q).dot(n);
    }
  }
}

const VmLane* VectorMap::lane_by_key(const std::string& key) const {
  for (const VmLane& l : lanes) {
    if (l.key == key) return &l;
  }
  return nullptr;
}

int VectorMap::nearest_lane(const Vec2& p) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const VmLane& lane : lanes) {
    for (const MapPoint& mp : lane.points) {
      const double d2 = (mp.position - p).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = lane.id;
      }
    }
  }
  return best;
}

VectorMap build_vector_map(const RoadNetwork& network, double spacing,
                           double default_speed_limit) {
  if (!(spacing >= 0.1 && spacing <= 2.0)) {
    throw Error(ErrorKind::Config, "sampling spacing must lie in [0.1, 2.0] m");
  }

  VectorMap map;
  map.spacing = spacing;
  // (road, section, lane) -> dense lane index
  std::map<std::string, int> index_by_key;
  std::vector<PendingLink> pending;

  for (const Road& road : network.roads) {
    const RefLine ref{&road};
    const double road_speed = road.speed_limit > 0.0 ? road.speed_limit : default_speed_limit;

    for (std::size_t si = 0; si < road.sections.size(); ++si) {
      const LaneSection& section = road.sections[si];
      const double s_begin = section.s;
      const double s_end = si + 1 < road.sections.size() ? road.sections[si + 1].s : road.length;
      const double section_len = s_end - s_begin;
      if (section_len <= 0.0) {
        throw Error(ErrorKind::Geometry, "empty lane section on road " + std::to_string(road.id));
      }
      const int samples = static_cast<int>(std::ceil(section_len / spacing - 1e-9)) + 1;
      const double step = section_len / (samples - 1);

      const auto emit_lane = [&](const Lane& lane) {
        VmLane vm;
        vm.key = lane_key(road.id, static_cast<int>(si), lane.id);
        vm.speed_limit = road_speed;
        vm.points.reserve(static_cast<std::size_t>(samples));
        for (int k = 0; k < samples; ++k) {
          const double ds = std::min(k * step, section_len);
          const double s = s_begin + ds;
          const double width = section.lane(lane.id)->width_at(ds);
          if (width < 0.0) {
            throw Error(ErrorKind::Geometry,
                        "negative lane width on " + vm.key + " at s=" + format_number(s));
          }
          const double offset = center_offset(section, lane.id, ds);
          const double ref_heading = ref.heading(s);
          MapPoint mp;
          mp.position = ref.point(s) + offset * left_normal(ref_heading);
          mp.width = width;
          mp.heading = lane.id < 0 ? ref_heading : wrap_angle(ref_heading + kPi);
          vm.points.push_back(mp);
        }
        if (lane.id > 0) std::reverse(vm.points.begin(), vm.points.end());

        vm.cum_s.resize(vm.points.size(), 0.0);
        for (std::size_t i = 1; i < vm.points.size(); ++i) {
          vm.cum_s[i] = vm.cum_s[i - 1] +
                        (vm.points[i].position - vm.points[i - 1].position).norm();
        }
        vm.length = vm.cum_s.back();
        vm.id = static_cast<int>(map.lanes.size());
        index_by_key[vm.key] = vm.id;

        // Successor in travel direction: next section for right lanes,
        // previous section for left lanes; road links at the ends.
        const Lane* src = section.lane(lane.id);
        if (lane.id < 0 && src->link.has_successor) {
          if (si + 1 < road.sections.size()) {
            pending.push_back({vm.id, road.id, src->link.successor});
          } else if (road.successor.valid) {
            pending.push_back({vm.id, road.successor.road_id, src->link.successor});
          }
        } else if (lane.id > 0 && src->link.has_predecessor) {
          if (si > 0) {
            pending.push_back({vm.id, road.id, src->link.predecessor});
          } else if (road.predecessor.valid) {
            pending.push_back({vm.id, road.predecessor.road_id, src->link.predecessor});
          }
        }
        map.lanes.push_back(std::move(vm));
      };

      for (const Lane& lane : section.left) {
        if (lane.driving()) emit_lane(lane);
      }
      for (const Lane& lane : section.right) {
        if (lane.driving()) emit_lane(lane);
      }
    }
  }

  // Resolve pending links. Within-road section hops and road-to-road hops are
  // both expressed as (target road, lane); for multi-section roads the hop
  // target is the adjacent section, found by matching endpoints.
  const auto find_lane_index = [&](int road_id, int lane_id, const Vec2& expected_start) -> int {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const VmLane& cand : map.lanes) {
      // key format road:section:lane
      const std::string prefix = std::to_string(road_id) + ":";
      const std::string suffix = ":" + std::to_string(lane_id);
      if (!cand.key.starts_with(prefix) || !cand.key.ends_with(suffix)) continue;
      const double d = (cand.points.front().position - expected_start).norm();
      if (d < best_d) {
        best_d = d;
        best = cand.id;
      }
    }
    return best_d <= kLinkContinuityTolerance ? best : -1;
  };

  for (const PendingLink& link : pending) {
    VmLane& from = map.lanes[static_cast<std::size_t>(link.from_index)];
    const Vec2 tail = from.points.back().position;
    const int target = find_lane_index(link.to_road, link.to_lane, tail);
    if (target < 0) {
      throw Error(ErrorKind::Topology,
                  "successor of lane " + from.key + " (road " + std::to_string(link.to_road) +
                      ", lane " + std::to_string(link.to_lane) +
                      ") does not continue within " + format_number(kLinkContinuityTolerance) +
                      " m");
    }
    from.successors.push_back(target);
  }

  // Same-direction neighbors: adjacent lane ids of the same sign within one
  // section. In the travel frame, "left" is toward the reference line for
  // right-hand lanes and away from it for left-hand lanes.
  for (VmLane& lane : map.lanes) {
    const auto pos = lane.key.rfind(':');
    const int lane_id = std::stoi(lane.key.substr(pos + 1));
    const std::string stem = lane.key.substr(0, pos + 1);
    const auto neighbor_index = [&](int id) -> int {
      const auto it = index_by_key.find(stem + std::to_string(id));
      return it == index_by_key.end() ? -1 : it->second;
    };
    if (lane_id < 0) {
      lane.left_neighbor = lane_id + 1 != 0 ? neighbor_index(lane_id + 1) : -1;
      lane.right_neighbor = neighbor_index(lane_id - 1);
    } else {
      lane.left_neighbor = lane_id - 1 != 0 ? neighbor_index(lane_id - 1) : -1;
      lane.right_neighbor = neighbor_index(lane_id + 1);
    }
  }

  // Traffic controls: a stop line across each controlled lane plus one anchor.
  for (const TrafficControl& control : network.controls) {
    const Road* road = network.road(control.road_id);
    const RefLine ref{road};
    LightAnchor anchor;
    anchor.control_id = control.id;
    anchor.position = ref.point(control.s) + control.t * left_normal(ref.heading(control.s));
    for (int lane_id : control.lane_ids) {
      // Locate the section containing s.
      int si = 0;
      for (std::size_t i = 0; i < road->sections.size(); ++i) {
        if (road->sections[i].s <= control.s + 1e-9) si = static_cast<int>(i);
      }
      const auto it = index_by_key.find(lane_key(road->id, si, lane_id));
      if (it == index_by_key.end()) continue;  // control on a non-driving lane
      const VmLane& lane = map.lanes[static_cast<std::size_t>(it->second)];
      double s_lane, lateral;
      const Vec2 anchor_on_ref = ref.point(control.s);
      lane.project(anchor_on_ref, s_lane, lateral);
      const Vec2 center = lane.point_at(s_lane);
      const double heading = lane.heading_at(s_lane);
      const auto s_it = std::upper_bound(lane.cum_s.begin(), lane.cum_s.end(), s_lane);
      const std::size_t s_idx =
          s_it == lane.cum_s.begin() ? 0 : static_cast<std::size_t>(s_it - lane.cum_s.begin()) - 1;
      const double half_w = 0.5 * lane.points[std::min(s_idx, lane.points.size() - 1)].width;
      StopLine line;
      line.control_id = control.id;
      line.kind = control.kind == TrafficControl::Kind::TrafficLight ? ControlKind::TrafficLight
                                                                     : ControlKind::StopSign;
      line.lane = lane.id;
      line.s_on_lane = s_lane;
      line.a = center + half_w * left_normal(heading);
      line.b = center - half_w * left_normal(heading);
      map.stop_lines.push_back(std::move(line));
      if (control.kind == TrafficControl::Kind::TrafficLight) anchor.lanes.push_back(lane.id);
    }
    if (control.kind == TrafficControl::Kind::TrafficLight) {
      map.lights.push_back(std::move(anchor));
    }
  }

  // Crosswalks as oriented quads on the reference line.
  for (const CrosswalkObject& cw : network.crosswalks) {
    const Road* road = network.road(cw.road_id);
    const RefLine ref{road};
    const Vec2 center = ref.point(cw.s) + cw.t * left_normal(ref.heading(cw.s));
    const double h = ref.heading(cw.s);
    const Vec2 along = 0.5 * cw.length * heading_vector(h);
    const Vec2 across = 0.5 * cw.width * left_normal(h);
    CrosswalkPolygon poly;
    poly.corners = {center - along - across, center + along - across, center + along + across,
                    center - along + across};
    map.crosswalks.push_back(std::move(poly));
  }

  // Continuity invariant: every successor starts where its predecessor ends.
  for (const VmLane& lane : map.lanes) {
    for (int succ : lane.successors) {
      const double gap =
          (map.lanes[static_cast<std::size_t>(succ)].points.front().position -
           lane.points.back().position)
              .norm();
      if (gap > kLinkContinuityTolerance) {
        throw Error(ErrorKind::Topology, "lane " + lane.key + " -> " +
                                             map.lanes[static_cast<std::size_t>(succ)].key +
                                             " gap " + format_number(gap) + " m");
      }
    }
  }
  return map;
}

void write_vector_map(std::ostream& out, const VectorMap& map) {
  out << "vectormap 1\n";
  out << "spacing " << format_number(map.spacing) << "\n";
  for (const VmLane& lane : map.lanes) {
    out << "lane id=" << lane.id << " key=" << lane.key
        << " speed_limit=" << format_number(lane.speed_limit)
        << " length=" << format_number(lane.length) << " points=" << lane.points.size()
        << " successors=";
    if (lane.successors.empty()) out << "-";
    for (std::size_t i = 0; i < lane.successors.size(); ++i) {
      out << (i ? "," : "") << lane.successors[i];
    }
    out << " left=" << lane.left_neighbor << " right=" << lane.right_neighbor << "\n";
    for (const MapPoint& p : lane.points) {
      out << "pt x=" << format_number(p.position.x()) << " y=" << format_number(p.position.y())
          << " hdg=" << format_number(p.heading) << " w=" << format_number(p.width) << "\n";
    }
  }
  for (const StopLine& line : map.stop_lines) {
    out << "stopline control=" << line.control_id
        << " kind=" << (line.kind == ControlKind::TrafficLight ? "traffic-light" : "stop-sign")
        << " lane=" << line.lane << " s=" << format_number(line.s_on_lane)
        << " ax=" << format_number(line.a.x()) << " ay=" << format_number(line.a.y())
        << " bx=" << format_number(line.b.x()) << " by=" << format_number(line.b.y()) << "\n";
  }
  for (const LightAnchor& light : map.lights) {
    out << "light control=" << light.control_id << " x=" << format_number(light.position.x())
        << " y=" << format_number(light.position.y()) << " lanes=";
    if (light.lanes.empty()) out << "-";
    for (std::size_t i = 0; i < light.lanes.size(); ++i) out << (i ? "," : "") << light.lanes[i];
    out << "\n";
  }
  for (const CrosswalkPolygon& cw : map.crosswalks) {
    out << "crosswalk";
    for (const Vec2& c : cw.corners) {
      out << " " << format_number(c.x()) << "," << format_number(c.y());
    }
    out << "\n";
  }
}

std::string serialize_vector_map(const VectorMap& map) {
  std::ostringstream out;
  write_vector_map(out, map);
  return out.str();
}

}  // namespace adbench::mapkit
