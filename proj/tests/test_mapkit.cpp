#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adbench/error.hpp"
#include "adbench/mapkit/opendrive.hpp"
#include "adbench/mapkit/route.hpp"
#include "adbench/mapkit/vector_map.hpp"
#include "adbench/mapkit/xml.hpp"

using namespace adbench;
using namespace adbench::mapkit;

namespace {

const char* kSingleRoad = R"(<?xml version="1.0"?>
<OpenDRIVE>
  <road name="r" length="100.0" id="1" junction="-1">
    <planView>
      <geometry s="0" x="0" y="0" hdg="0" length="100"><line/></geometry>
    </planView>
    <lanes>
      <laneSection s="0">
        <center><lane id="0" type="none"/></center>
        <right>
          <lane id="-1" type="driving"><width sOffset="0" a="3.5" b="0" c="0" d="0"/></lane>
          <lane id="-2" type="driving"><width sOffset="0" a="3.5" b="0" c="0" d="0"/></lane>
        </right>
      </laneSection>
    </lanes>
  </road>
</OpenDRIVE>)";

// Two chained roads, single driving lane each.
const char* kTwoRoads = R"(<OpenDRIVE>
  <road name="a" length="60.0" id="1" junction="-1">
    <link><successor elementType="road" elementId="2" contactPoint="start"/></link>
    <planView>
      <geometry s="0" x="0" y="0" hdg="0" length="60"><line/></geometry>
    </planView>
    <lanes>
      <laneSection s="0">
        <center><lane id="0" type="none"/></center>
        <right>
          <lane id="-1" type="driving">
            <link><successor id="-1"/></link>
            <width sOffset="0" a="3.0" b="0" c="0" d="0"/>
          </lane>
        </right>
      </laneSection>
    </lanes>
  </road>
  <road name="b" length="40.0" id="2" junction="-1">
    <link><predecessor elementType="road" elementId="1" contactPoint="end"/></link>
    <planView>
      <geometry s="0" x="60" y="0" hdg="0" length="40"><line/></geometry>
    </planView>
    <lanes>
      <laneSection s="0">
        <center><lane id="0" type="none"/></center>
        <right>
          <lane id="-1" type="driving">
            <link><predecessor id="-1"/></link>
            <width sOffset="0" a="3.0" b="0" c="0" d="0"/>
          </lane>
        </right>
      </laneSection>
    </lanes>
  </road>
</OpenDRIVE>)";

std::string map_path(const char* name) { return std::string(TEST_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("xml parser reads attributes and nesting") {
  const auto root = xml::parse_document(
      "<a x=\"1\"><b y=\"2.5\"/><b y=\"3\"/><!-- note --><c/></a>");
  CHECK(root.name == "a");
  CHECK(root.number("x") == 1.0);
  CHECK(root.children_named("b").size() == 2);
  CHECK(root.children_named("b")[1]->number("y") == 3.0);
  CHECK(root.child("c") != nullptr);
  CHECK(root.child("d") == nullptr);
}

TEST_CASE("xml parser reports the failing line") {
  const char* bad = "<a>\n  <b>\n</a>";
  try {
    xml::parse_document(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(xml::parse_document("<a x=1/>"), Error);
  CHECK_THROWS_AS(xml::parse_document("plain text"), Error);
}

TEST_CASE("xml entities decode inside attribute values") {
  const auto root = xml::parse_document("<a name=\"x &amp; y &lt;3\"/>");
  CHECK(root.attribute_or("name", "") == "x & y <3");
}

TEST_CASE("parse single straight road") {
  const RoadNetwork net = parse_opendrive(kSingleRoad);
  REQUIRE(net.roads.size() == 1);
  const Road& road = net.roads[0];
  CHECK(road.length == 100.0);
  REQUIRE(road.geometry.size() == 1);
  CHECK(road.geometry[0].kind == GeometryKind::Line);
  int driving = 0;
  for (const Lane& l : road.sections[0].right) driving += l.driving();
  CHECK(driving == 2);
}

TEST_CASE("arc endpoint matches numeric integration of the heading ODE") {
  GeometrySegment arc;
  arc.kind = GeometryKind::Arc;
  arc.origin = {0.0, 0.0};
  arc.heading = 0.3;
  arc.length = 157.08;
  arc.curvature = 0.01;

  // Closed form: heading rotates by curvature * length.
  CHECK(angle_diff(arc.heading_at(arc.length), arc.heading) ==
        doctest::Approx(1.5708).epsilon(1e-9));

  // Oracle: midpoint integration of x' = cos(psi), y' = sin(psi), psi' = k.
  Vec2 p{0.0, 0.0};
  double psi = arc.heading;
  const int steps = 2000000;
  const double h = arc.length / steps;
  for (int i = 0; i < steps; ++i) {
    const double mid = psi + 0.5 * arc.curvature * h;
    p += h * heading_vector(mid);
    psi += arc.curvature * h;
  }
  CHECK((arc.point_at(arc.length) - p).norm() < 1e-6);
  CHECK(wrap_angle(psi) == doctest::Approx(arc.heading_at(arc.length)).epsilon(1e-9));
}

TEST_CASE("spiral geometry is rejected as unsupported") {
  const std::string doc = R"(<OpenDRIVE>
    <road name="r" length="50" id="1">
      <planView><geometry s="0" x="0" y="0" hdg="0" length="50"><spiral curvStart="0" curvEnd="0.1"/></geometry></planView>
      <lanes><laneSection s="0"><center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving"><width sOffset="0" a="3" b="0" c="0" d="0"/></lane></right>
      </laneSection></lanes>
    </road></OpenDRIVE>)";
  try {
    parse_opendrive(doc);
    FAIL("expected unsupported-feature error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
    CHECK(std::string(e.what()).find("spiral") != std::string::npos);
  }
}

TEST_CASE("dangling lane link raises a topology error") {
  const std::string doc = R"(<OpenDRIVE>
    <road name="r" length="50" id="1">
      <planView><geometry s="0" x="0" y="0" hdg="0" length="50"><line/></geometry></planView>
      <lanes><laneSection s="0"><center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving">
          <link><successor id="-7"/></link>
          <width sOffset="0" a="3" b="0" c="0" d="0"/>
        </lane></right>
      </laneSection></lanes>
    </road></OpenDRIVE>)";
  CHECK_THROWS_AS(parse_opendrive(doc), Error);
  try {
    parse_opendrive(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Topology);
  }
}

TEST_CASE("build_vector_map samples 201 points per lane on a 100 m road") {
  const VectorMap map = build_vector_map(parse_opendrive(kSingleRoad), 0.5);
  REQUIRE(map.lanes.size() == 2);
  for (const VmLane& lane : map.lanes) {
    CHECK(lane.points.size() == 201);
    for (const MapPoint& p : lane.points) CHECK(p.width == doctest::Approx(3.5));
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      const double gap = (lane.points[i].position - lane.points[i - 1].position).norm();
      CHECK(gap >= 0.1);
      CHECK(gap <= 2.0);
    }
  }
  // Right-of-reference convention: lane -1 center at t=-1.75, lane -2 at -5.25.
  CHECK(map.lanes[0].points[0].position.y() == doctest::Approx(-1.75));
  CHECK(map.lanes[1].points[0].position.y() == doctest::Approx(-5.25));
}

TEST_CASE("negative lane width raises a geometry error naming the lane") {
  const std::string doc = R"(<OpenDRIVE>
    <road name="r" length="50" id="1">
      <planView><geometry s="0" x="0" y="0" hdg="0" length="50"><line/></geometry></planView>
      <lanes><laneSection s="0"><center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving"><width sOffset="0" a="1.0" b="-0.5" c="0" d="0"/></lane></right>
      </laneSection></lanes>
    </road></OpenDRIVE>)";
  const RoadNetwork net = parse_opendrive(doc);
  try {
    build_vector_map(net, 0.5);
    FAIL("expected geometry error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
    CHECK(std::string(e.what()).find("1:0:-1") != std::string::npos);
  }
}

TEST_CASE("lane successor continuity across two roads") {
  const VectorMap map = build_vector_map(parse_opendrive(kTwoRoads), 0.5);
  REQUIRE(map.lanes.size() == 2);
  const VmLane* first = map.lane_by_key("1:0:-1");
  REQUIRE(first != nullptr);
  REQUIRE(first->successors.size() == 1);
  const VmLane& second = map.lanes[static_cast<std::size_t>(first->successors[0])];
  CHECK(second.key == "2:0:-1");
  CHECK((second.points.front().position - first->points.back().position).norm() <= 0.5);
}

TEST_CASE("route on a single lane spans the requested arc length") {
  const VectorMap map = build_vector_map(parse_opendrive(kSingleRoad), 0.5);
  const Route route = extract_route(map, "1:0:-1", 0.0, "1:0:-1", 50.0);
  CHECK(route.length == doctest::Approx(50.0).epsilon(0.011));
  for (std::size_t i = 1; i < route.s.size(); ++i) CHECK(route.s[i] > route.s[i - 1]);
  CHECK(route.length == doctest::Approx(route.s.back()).epsilon(1e-9));
}

TEST_CASE("route to a neighbor lane contains exactly one jump") {
  const VectorMap map = build_vector_map(parse_opendrive(kSingleRoad), 0.5);
  const VmLane* outer = map.lane_by_key("1:0:-2");
  REQUIRE(outer != nullptr);
  CHECK(map.lanes[static_cast<std::size_t>(outer->left_neighbor)].key == "1:0:-1");

  const Route route = extract_route(map, "1:0:-1", 5.0, "1:0:-2", 80.0);
  int jumps = 0;
  for (std::size_t i = 1; i < route.waypoints.size(); ++i) {
    if ((route.waypoints[i].position - route.waypoints[i - 1].position).norm() > 1.5) ++jumps;
  }
  CHECK(jumps == 1);
  // Graph oracle: forward distance plus one lateral hop, within 5%.
  const double oracle = (80.0 - 5.0) + 3.5;
  CHECK(route.length <= oracle * 1.05);
  CHECK(route.length >= (80.0 - 5.0) * 0.95);
}

TEST_CASE("unreachable goal raises no-route listing components") {
  // Two parallel, unlinked roads.
  const std::string doc = R"(<OpenDRIVE>
    <road name="a" length="50" id="1">
      <planView><geometry s="0" x="0" y="0" hdg="0" length="50"><line/></geometry></planView>
      <lanes><laneSection s="0"><center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving"><width sOffset="0" a="3" b="0" c="0" d="0"/></lane></right>
      </laneSection></lanes>
    </road>
    <road name="b" length="50" id="2">
      <planView><geometry s="0" x="0" y="30" hdg="0" length="50"><line/></geometry></planView>
      <lanes><laneSection s="0"><center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving"><width sOffset="0" a="3" b="0" c="0" d="0"/></lane></right>
      </laneSection></lanes>
    </road></OpenDRIVE>)";
  const VectorMap map = build_vector_map(parse_opendrive(doc), 0.5);
  try {
    extract_route(map, "1:0:-1", 0.0, "2:0:-1", 40.0);
    FAIL("expected no-route error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoRoute);
    CHECK(std::string(e.what()).find("1:0:-1") != std::string::npos);
  }
}

TEST_CASE("desk maps round-trip lengths and arc circles") {
  for (const char* name : {"desk_straight.xodr", "desk_curve.xodr", "desk_junction.xodr"}) {
    const RoadNetwork net = load_opendrive_file(map_path(name));
    for (const Road& road : net.roads) {
      // Sampled reference-line length vs declared length.
      double sampled = 0.0;
      Vec2 prev;
      bool have_prev = false;
      const double step = 0.5;
      for (const GeometrySegment& g : road.geometry) {
        const int n = static_cast<int>(std::ceil(g.length / step)) + 1;
        for (int i = 0; i < n; ++i) {
          const double ds = std::min(i * g.length / (n - 1), g.length);
          const Vec2 p = g.point_at(ds);
          if (have_prev) sampled += (p - prev).norm();
          prev = p;
          have_prev = true;

          if (g.kind == GeometryKind::Arc) {
            const double radius = 1.0 / std::abs(g.curvature);
            const Vec2 center{g.origin.x() - std::sin(g.heading) / g.curvature,
                              g.origin.y() + std::cos(g.heading) / g.curvature};
            CHECK(std::abs((p - center).norm() - radius) < 1e-6);
          }
        }
      }
      CHECK(std::abs(sampled - road.length) / road.length < 1e-3);
    }
  }
}

TEST_CASE("desk junction connects lanes and places controls") {
  const VectorMap map = build_vector_map(load_opendrive_file(map_path("desk_junction.xodr")), 0.5);
  const VmLane* approach = map.lane_by_key("1:0:-1");
  REQUIRE(approach != nullptr);
  REQUIRE(approach->successors.size() == 1);
  CHECK(map.lanes[static_cast<std::size_t>(approach->successors[0])].key == "2:0:-1");

  const VmLane* back = map.lane_by_key("2:0:1");
  REQUIRE(back != nullptr);
  REQUIRE(back->successors.size() == 1);
  CHECK(map.lanes[static_cast<std::size_t>(back->successors[0])].key == "1:0:1");

  REQUIRE(map.lights.size() == 1);
  REQUIRE(map.stop_lines.size() == 1);
  CHECK(map.stop_lines[0].lane == approach->id);
  CHECK(map.stop_lines[0].s_on_lane == doctest::Approx(190.0).epsilon(1e-3));

  // Goal s is measured along the successor lane's own centerline.
  const Route route = extract_route(map, "1:0:-1", 5.0, "2:0:-1", 85.0);
  CHECK(route.length == doctest::Approx(195.0 + 85.0).epsilon(0.01));
}

TEST_CASE("vector map serialization is deterministic") {
  const std::string text = read_text_file(map_path("desk_curve.xodr"));
  const std::string a = serialize_vector_map(build_vector_map(parse_opendrive(text), 0.5));
  const std::string b = serialize_vector_map(build_vector_map(parse_opendrive(text), 0.5));
  CHECK(a == b);
  CHECK(a.starts_with("vectormap 1\n"));
  CHECK(a.find("lane id=0") != std::string::npos);
}

TEST_CASE("crosswalks become quads") {
  const VectorMap map = build_vector_map(load_opendrive_file(map_path("desk_straight.xodr")), 0.5);
  REQUIRE(map.crosswalks.size() == 1);
  CHECK(map.crosswalks[0].corners.size() == 4);
}

TEST_CASE("spacing outside [0.1, 2.0] is rejected") {
  const RoadNetwork net = parse_opendrive(kSingleRoad);
  CHECK_THROWS_AS(build_vector_map(net, 0.05), Error);
  CHECK_THROWS_AS(build_vector_map(net, 2.5), Error);
}
