#include "adbench/mapkit/opendrive.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "adbench/error.hpp"
#include "adbench/mapkit/xml.hpp"

namespace adbench::mapkit {

Vec2 GeometrySegment::point_at(double ds) const {
  if (kind == GeometryKind::Line) {
    return origin + ds * heading_vector(heading);
  }
  const double h1 = heading + curvature * ds;
  return {origin.x() + (std::sin(h1) - std::sin(heading)) / curvature,
          origin.y() - (std::cos(h1) - std::cos(heading)) / curvature};
}

double GeometrySegment::heading_at(double ds) const {
  if (kind == GeometryKind::Line) return heading;
  return wrap_angle(heading + curvature * ds);
}

double Lane::width_at(double section_ds) const {
  if (widths.empty()) return 0.0;
  const WidthPoly* active = &widths.front();
  for (const WidthPoly& w : widths) {
    if (w.s_offset <= section_ds + 1e-9) active = &w;
  }
  return active->eval(section_ds - active->s_offset);
}

const Lane* LaneSection::lane(int id) const {
  for (const Lane& l : left) {
    if (l.id == id) return &l;
  }
  for (const Lane& l : right) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

const Road* RoadNetwork::road(int id) const {
  for (const Road& r : roads) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg, int line) {
  throw Error(kind, msg + " at line " + std::to_string(line));
}

GeometrySegment parse_geometry(const xml::Node& node) {
  GeometrySegment seg;
  seg.s = node.number("s");
  seg.origin = {node.number("x"), node.number("y")};
  seg.heading = node.number("hdg");
  seg.length = node.number("length");
  if (seg.length <= 0.0) fail(ErrorKind::Geometry, "geometry segment with length <= 0", node.line);

  const xml::Node* shape = nullptr;
  for (const xml::Node& c : node.children) {
    shape = &c;
    break;
  }
  if (!shape) fail(ErrorKind::Parse, "<geometry> without a shape child", node.line);
  if (shape->name == "line") {
    seg.kind = GeometryKind::Line;
  } else if (shape->name == "arc") {
    seg.kind = GeometryKind::Arc;
    seg.curvature = shape->number("curvature");
    if (seg.curvature == 0.0) fail(ErrorKind::Geometry, "arc with zero curvature", shape->line);
  } else {
    fail(ErrorKind::Unsupported, "reference-line geometry <" + shape->name + ">", shape->line);
  }
  return seg;
}

Lane parse_lane(const xml::Node& node) {
  Lane lane;
  lane.id = static_cast<int>(node.number("id"));
  lane.type = node.attribute_or("type", "none");
  if (const xml::Node* link = node.child("link")) {
    if (const xml::Node* p = link->child("predecessor")) {
      lane.link.has_predecessor = true;
      lane.link.predecessor = static_cast<int>(p->number("id"));
    }
    if (const xml::Node* s = link->child("successor")) {
      lane.link.has_successor = true;
      lane.link.successor = static_cast<int>(s->number("id"));
    }
  }
  for (const xml::Node* w : node.children_named("width")) {
    lane.widths.push_back(
        {w->number_or("sOffset", 0.0), w->number("a"), w->number_or("b", 0.0),
         w->number_or("c", 0.0), w->number_or("d", 0.0)});
  }
  std::sort(lane.widths.begin(), lane.widths.end(),
            [](const WidthPoly& a, const WidthPoly& b) { return a.s_offset < b.s_offset; });
  return lane;
}

LaneSection parse_lane_section(const xml::Node& node) {
  LaneSection section;
  section.s = node.number_or("s", 0.0);
  if (const xml::Node* left = node.child("left")) {
    for (const xml::Node* l : left->children_named("lane")) section.left.push_back(parse_lane(*l));
  }
  if (const xml::Node* right = node.child("right")) {
    for (const xml::Node* l : right->children_named("lane")) section.right.push_back(parse_lane(*l));
  }
  // Inner lanes first so width offsets accumulate outward.
  std::sort(section.left.begin(), section.left.end(),
            [](const Lane& a, const Lane& b) { return a.id < b.id; });
  std::sort(section.right.begin(), section.right.end(),
            [](const Lane& a, const Lane& b) { return a.id > b.id; });
  return section;
}

RoadLink parse_road_link(const xml::Node& node) {
  RoadLink link;
  if (node.attribute_or("elementType", "road") != "road") {
    fail(ErrorKind::Unsupported, "road link elementType '" + node.attribute_or("elementType", "") +
                                     "' (only road links are supported)",
         node.line);
  }
  link.valid = true;
  link.road_id = static_cast<int>(node.number("elementId"));
  link.contact_start = node.attribute_or("contactPoint", "start") == "start";
  return link;
}

std::vector<int> parse_validity(const xml::Node& signal) {
  std::vector<int> lanes;
  for (const xml::Node* v : signal.children_named("validity")) {
    const int from = static_cast<int>(v->number("fromLane"));
    const int to = static_cast<int>(v->number("toLane"));
    for (int id = std::min(from, to); id <= std::max(from, to); ++id) {
      if (id != 0) lanes.push_back(id);
    }
  }
  return lanes;
}

void parse_signals(const xml::Node& node, const Road& road, RoadNetwork& network) {
  for (const xml::Node* sig : node.children_named("signal")) {
    const std::string type = sig->attribute_or("type", "");
    TrafficControl control;
    if (type == "1000001") {
      control.kind = TrafficControl::Kind::TrafficLight;
    } else if (type == "206") {
      control.kind = TrafficControl::Kind::StopSign;
    } else {
      continue;  // other signal types are not modeled
    }
    control.id = sig->attribute_or("id", "");
    control.road_id = road.id;
    control.s = sig->number("s");
    control.t = sig->number_or("t", 0.0);
    control.lane_ids = parse_validity(*sig);
    if (control.lane_ids.empty()) {
      // No validity record: the control applies to every driving lane.
      for (const LaneSection& section : road.sections) {
        if (!(section.s <= control.s)) continue;
        for (const Lane& l : section.left) {
          if (l.driving()) control.lane_ids.push_back(l.id);
        }
        for (const Lane& l : section.right) {
          if (l.driving()) control.lane_ids.push_back(l.id);
        }
      }
      std::sort(control.lane_ids.begin(), control.lane_ids.end());
      control.lane_ids.erase(std::unique(control.lane_ids.begin(), control.lane_ids.end()),
                             control.lane_ids.end());
    }
    network.controls.push_back(std::move(control));
  }
}

void parse_objects(const xml::Node& node, const Road& road, RoadNetwork& network) {
  for (const xml::Node* obj : node.children_named("object")) {
    if (obj->attribute_or("type", "") != "crosswalk") continue;
    CrosswalkObject cw;
    cw.road_id = road.id;
    cw.s = obj->number("s");
    cw.t = obj->number_or("t", 0.0);
    cw.length = obj->number_or("length", 4.0);
    cw.width = obj->number_or("width", 4.0);
    network.crosswalks.push_back(cw);
  }
}

Road parse_road(const xml::Node& node, RoadNetwork& network) {
  Road road;
  road.id = static_cast<int>(node.number("id"));
  road.name = node.attribute_or("name", "");
  road.length = node.number("length");
  if (road.length <= 0.0) fail(ErrorKind::Geometry, "road with length <= 0", node.line);

  if (const xml::Node* link = node.child("link")) {
    if (const xml::Node* p = link->child("predecessor")) road.predecessor = parse_road_link(*p);
    if (const xml::Node* s = link->child("successor")) road.successor = parse_road_link(*s);
  }
  if (const xml::Node* type = node.child("type")) {
    if (const xml::Node* speed = type->child("speed")) {
      road.speed_limit = speed->number("max");
      const std::string unit = speed->attribute_or("unit", "m/s");
      if (unit == "km/h") road.speed_limit /= 3.6;
      else if (unit == "mph") road.speed_limit *= 0.44704;
    }
  }

  const xml::Node* plan_view = node.child("planView");
  if (!plan_view) fail(ErrorKind::Parse, "road without <planView>", node.line);
  for (const xml::Node* g : plan_view->children_named("geometry")) {
    road.geometry.push_back(parse_geometry(*g));
  }
  if (road.geometry.empty()) fail(ErrorKind::Parse, "road without geometry", plan_view->line);
  std::sort(road.geometry.begin(), road.geometry.end(),
            [](const GeometrySegment& a, const GeometrySegment& b) { return a.s < b.s; });

  const xml::Node* lanes = node.child("lanes");
  if (!lanes) fail(ErrorKind::Parse, "road without <lanes>", node.line);
  for (const xml::Node* s : lanes->children_named("laneSection")) {
    road.sections.push_back(parse_lane_section(*s));
  }
  if (road.sections.empty()) fail(ErrorKind::Parse, "road without lane sections", lanes->line);
  std::sort(road.sections.begin(), road.sections.end(),
            [](const LaneSection& a, const LaneSection& b) { return a.s < b.s; });

  if (const xml::Node* signals = node.child("signals")) parse_signals(*signals, road, network);
  if (const xml::Node* objects = node.child("objects")) parse_objects(*objects, road, network);
  return road;
}

// Lane links must name lanes that exist in the adjacent section/road.
void validate_topology(const RoadNetwork& network) {
  for (const Road& road : network.roads) {
    for (const RoadLink* link : {&road.predecessor, &road.successor}) {
      if (link->valid && !network.road(link->road_id)) {
        throw Error(ErrorKind::Topology, "road " + std::to_string(road.id) +
                                             " links to unknown road " +
                                             std::to_string(link->road_id));
      }
    }
    for (std::size_t si = 0; si < road.sections.size(); ++si) {
      const LaneSection& section = road.sections[si];
      const auto check_lane_link = [&](const Lane& lane, bool successor_side, int target_id) {
        const LaneSection* target_section = nullptr;
        int target_road = road.id;
        if (successor_side) {
          if (si + 1 < road.sections.size()) {
            target_section = &road.sections[si + 1];
          } else if (road.successor.valid) {
            const Road* next = network.road(road.successor.road_id);
            target_road = next->id;
            target_section = road.successor.contact_start ? &next->sections.front()
                                                          : &next->sections.back();
          }
        } else {
          if (si > 0) {
            target_section = &road.sections[si - 1];
          } else if (road.predecessor.valid) {
            const Road* prev = network.road(road.predecessor.road_id);
            target_road = prev->id;
            target_section = road.predecessor.contact_start ? &prev->sections.front()
                                                            : &prev->sections.back();
          }
        }
        if (!target_section || !target_section->lane(target_id)) {
          throw Error(ErrorKind::Topology,
                      "lane " + std::to_string(lane.id) + " on road " + std::to_string(road.id) +
                          (successor_side ? " names successor lane " : " names predecessor lane ") +
                          std::to_string(target_id) + " which does not exist on road " +
                          std::to_string(target_road));
        }
      };
      const auto check_lane = [&](const Lane& lane) {
        if (lane.link.has_successor) check_lane_link(lane, true, lane.link.successor);
        if (lane.link.has_predecessor) check_lane_link(lane, false, lane.link.predecessor);
      };
      for (const Lane& l : section.left) check_lane(l);
      for (const Lane& l : section.right) check_lane(l);
    }
  }
  for (const TrafficControl& control : network.controls) {
    const Road* road = network.road(control.road_id);
    for (int lane_id : control.lane_ids) {
      bool found = false;
      for (const LaneSection& section : road->sections) {
        if (section.lane(lane_id)) found = true;
      }
      if (!found) {
        throw Error(ErrorKind::Topology, "signal " + control.id + " controls unknown lane " +
                                             std::to_string(lane_id) + " on road " +
                                             std::to_string(control.road_id));
      }
    }
  }
}

}  // namespace

RoadNetwork parse_opendrive(std::string_view document) {
  const xml::Node root = xml::parse_document(document);
  if (root.name != "OpenDRIVE") {
    fail(ErrorKind::Parse, "root element is <" + root.name + ">, expected <OpenDRIVE>", root.line);
  }
  RoadNetwork network;
  for (const xml::Node* r : root.children_named("road")) {
    network.roads.push_back(parse_road(*r, network));
  }
  if (network.roads.empty()) {
    fail(ErrorKind::Parse, "document contains no <road> elements", root.line);
  }
  validate_topology(network);
  return network;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RoadNetwork load_opendrive_file(const std::string& path) {
  try {
    return parse_opendrive(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace adbench::mapkit
