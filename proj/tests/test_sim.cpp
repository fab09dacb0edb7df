#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "adbench/error.hpp"
#include "adbench/mapkit/opendrive.hpp"
#include "adbench/mapkit/route.hpp"
#include "adbench/sim/episode.hpp"
#include "adbench/sim/world.hpp"

using namespace adbench;
using namespace adbench::sim;

namespace {

std::string map_path(const char* name) { return std::string(TEST_DATA_DIR) + "/" + name; }

struct Desk {
  std::shared_ptr<const VectorMap> map;
  std::shared_ptr<const Route> route;
};

Desk straight_desk(double goal_s = 380.0) {
  auto map = std::make_shared<VectorMap>(
      mapkit::build_vector_map(mapkit::load_opendrive_file(map_path("desk_straight.xodr")), 0.5));
  auto route = std::make_shared<Route>(
      mapkit::extract_route(*map, "1:0:-2", 2.0, "1:0:-2", goal_s));
  return {map, route};
}

Desk junction_desk() {
  auto map = std::make_shared<VectorMap>(
      mapkit::build_vector_map(mapkit::load_opendrive_file(map_path("desk_junction.xodr")), 0.5));
  auto route = std::make_shared<Route>(
      mapkit::extract_route(*map, "1:0:-1", 150.0, "2:0:-1", 80.0));
  return {map, route};
}

ScenarioSpec crossing_spec(double anchor, double trigger = 20.0) {
  ScenarioSpec spec;
  spec.template_name = "DynamicObjectCrossing";
  spec.anchor_s = anchor;
  spec.trigger_distance = trigger;
  spec.seed = 7;
  return spec;
}

}  // namespace

TEST_CASE("dynamic object crossing stages a dormant pedestrian") {
  Desk desk = straight_desk();
  SimWorld world = load_scenario(crossing_spec(50.0, 20.0), desk.map, desk.route);

  // Dormant: not observable, not collidable.
  CHECK(world.observe().actors.empty());
  REQUIRE(world.actors().size() == 1);
  CHECK(world.actors()[0].kind == AgentKind::Pedestrian);
  CHECK(!world.actors()[0].active);

  // Drive forward until inside the trigger radius.
  while (world.progress() < 31.0) world.step({0.0, 1.0});
  CHECK(world.observe().actors.size() == 1);
  CHECK(world.actors()[0].active);
}

TEST_CASE("construction obstacle stages static boxes in the lane") {
  Desk desk = straight_desk();
  ScenarioSpec spec;
  spec.template_name = "ConstructionObstacle";
  spec.anchor_s = 60.0;
  spec.trigger_distance = 100.0;  // active from the start
  SimWorld world = load_scenario(spec, desk.map, desk.route);
  REQUIRE(world.observe().actors.size() == 3);
  for (const auto& actor : world.observe().actors) {
    CHECK(actor.kind == AgentKind::Static);
    double s, lateral;
    desk.route->project(actor.state.position(), s, lateral);
    CHECK(std::abs(lateral) < 1.0);
    CHECK(s >= 59.0);
    CHECK(s <= 68.0);
  }
}

TEST_CASE("identical spec and seed build identical worlds") {
  Desk desk = straight_desk();
  ScenarioSpec spec = crossing_spec(50.0);
  spec.seed = 7;
  SimWorld a = load_scenario(spec, desk.map, desk.route);
  SimWorld b = load_scenario(spec, desk.map, desk.route);
  CHECK(a.describe() == b.describe());
  CHECK(!a.describe().empty());

  // And identical control traces keep them identical.
  for (int i = 0; i < 200; ++i) {
    a.step({0.01, 0.5});
    b.step({0.01, 0.5});
  }
  CHECK(a.describe() == b.describe());
}

TEST_CASE("collision with a pedestrian is reported once per contact episode") {
  Desk desk = straight_desk();
  ScenarioSpec spec = crossing_spec(30.0, 60.0);
  spec.params["side_offset"] = 0.0;   // standing on the lane center
  spec.params["walk_speed"] = 0.0;    // and not moving
  spec.params["walk_distance"] = 0.0;
  SimWorld world = load_scenario(spec, desk.map, desk.route);

  int pedestrian_hits = 0;
  for (int i = 0; i < 400 && !world.terminated(); ++i) {
    for (const auto& e : world.step({0.0, 2.0})) {
      if (e.kind == InfractionKind::CollisionPedestrian) {
        ++pedestrian_hits;
        CHECK(e.actor_id >= 1);
      }
    }
    if (world.progress() > 45.0) break;
  }
  CHECK(pedestrian_hits == 1);
}

TEST_CASE("red light crossing emits an event") {
  Desk desk = junction_desk();
  ScenarioSpec spec;
  spec.template_name = "SignalizedJunctionLeftTurn";
  // Stop line sits 40 m from the route start (lane s 190, route starts at 150).
  spec.anchor_s = 40.0;
  spec.trigger_distance = 39.0;  // arms almost immediately
  spec.params["red_s"] = 30.0;
  spec.params["oncoming_gap"] = 200.0;  // park the adversary far away
  spec.params["oncoming_speed"] = 0.0;
  SimWorld world = load_scenario(spec, desk.map, desk.route);

  bool ran_red = false;
  for (int i = 0; i < 400 && !world.terminated(); ++i) {
    for (const auto& e : world.step({0.0, 2.0})) {
      if (e.kind == InfractionKind::RedLight) ran_red = true;
    }
    if (world.progress() > 60.0) break;
  }
  CHECK(ran_red);
}

TEST_CASE("route deviation terminates the episode") {
  Desk desk = straight_desk();
  SimWorld world(desk.map, desk.route, {}, {});
  bool deviated = false;
  for (int i = 0; i < 2000 && !world.terminated(); ++i) {
    // Turn until roughly perpendicular, then drive straight off the road.
    const double steer = std::abs(world.ego().psi) < 1.3 ? 0.4 : 0.0;
    for (const auto& e : world.step({steer, 2.0})) {
      if (e.kind == InfractionKind::RouteDeviation) deviated = true;
    }
  }
  CHECK(deviated);
  CHECK(world.terminated());
  CHECK(world.termination_reason() == TerminationReason::Deviated);
  CHECK_THROWS_AS(world.step({0.0, 0.0}), Error);
}

TEST_CASE("zero-control planner blocks after 90 seconds of stillness") {
  Desk desk = straight_desk();
  SimWorld world(desk.map, desk.route, {}, {});
  const EpisodeLog log = run_episode(world, [](const Observation&) { return ControlInput{}; },
                                     4000);
  CHECK(log.reason == TerminationReason::Blocked);
  CHECK(log.steps.size() == 1800);  // 90 s at 20 Hz
  REQUIRE(!log.events.empty());
  CHECK(log.events.back().kind == InfractionKind::AgentBlocked);
}

TEST_CASE("max steps caps the episode as a timeout") {
  Desk desk = straight_desk();
  SimWorld world(desk.map, desk.route, {}, {});
  const EpisodeLog log = run_episode(world, [](const Observation&) { return ControlInput{}; }, 10);
  CHECK(log.reason == TerminationReason::Timeout);
  CHECK(log.steps.size() == 10);
}

TEST_CASE("planner failure terminates with a recorded reason and partial log") {
  Desk desk = straight_desk();
  SimWorld world(desk.map, desk.route, {}, {});
  int calls = 0;
  const EpisodeLog log = run_episode(world,
                                     [&](const Observation&) -> ControlInput {
                                       if (++calls > 5) throw std::runtime_error("boom");
                                       return {0.0, 1.0};
                                     },
                                     100);
  CHECK(log.reason == TerminationReason::PlannerError);
  CHECK(log.steps.size() == 5);
}

TEST_CASE("progress is monotone and distance bounded by route length") {
  Desk desk = straight_desk(100.0);
  SimWorld world(desk.map, desk.route, {}, {});
  double last = world.progress();
  for (int i = 0; i < 1200 && !world.terminated(); ++i) {
    world.step({0.0, 2.0});
    CHECK(world.progress() >= last);
    last = world.progress();
  }
  CHECK(world.terminated());
  CHECK(world.termination_reason() == TerminationReason::Completed);
  CHECK(world.progress() == doctest::Approx(desk.route->length));
}

TEST_CASE("idm follower trails the ego without rear-ending it") {
  Desk desk = straight_desk();
  ScenarioSpec spec;
  spec.template_name = "OppositeVehicleRunningRedLight";
  spec.anchor_s = 60.0;
  spec.trigger_distance = 100.0;
  SimWorld world = load_scenario(spec, desk.map, desk.route);
  const Observation obs = world.observe();
  REQUIRE(obs.actors.size() == 1);
  const ObservedActor& adversary = obs.actors[0];
  CHECK(adversary.behavior == ActorBehavior::IdmFollower);
  // Oncoming: heading roughly opposite the ego.
  CHECK(std::cos(angle_diff(adversary.state.psi, world.ego().psi)) < -0.5);

  int collisions = 0;
  for (int i = 0; i < 600 && !world.terminated(); ++i) {
    for (const auto& e : world.step({0.0, 1.0})) {
      if (e.kind == InfractionKind::CollisionVehicle) ++collisions;
    }
  }
  CHECK(collisions == 0);  // adversary stays in its own lane
}

TEST_CASE("episode log round-trips through the line format") {
  Desk desk = straight_desk();
  SimWorld world = load_scenario(crossing_spec(50.0), desk.map, desk.route);
  EpisodeLog log = run_episode(world, [](const Observation&) { return ControlInput{0.0, 1.0}; },
                               300);
  log.meta.map_path = "maps/desk_straight.xodr";
  log.meta.scenario_path = "scenarios/x.json";
  log.meta.planner = "test";
  log.meta.seed = 7;
  log.solver_records.push_back({3, 2, 17, 1.25, 0.0, "optimal"});

  const std::string text = serialize_episode_log(log);
  std::istringstream in(text);
  const EpisodeLog round = read_episode_log(in);
  CHECK(round.steps.size() == log.steps.size());
  CHECK(round.distance == doctest::Approx(log.distance));
  CHECK(round.reason == log.reason);
  CHECK(round.solver_records.size() == 1);
  CHECK(round.meta.planner == "test");
  CHECK(serialize_episode_log(round) == text);  // byte-stable round trip
}

TEST_CASE("truncated episode log names the failing line") {
  Desk desk = straight_desk();
  SimWorld world(desk.map, desk.route, {}, {});
  EpisodeLog log = run_episode(world, [](const Observation&) { return ControlInput{0.0, 1.0}; },
                               50);
  std::string text = serialize_episode_log(log);
  text = text.substr(0, text.rfind("{\"type\":\"end\""));  // drop the end record
  std::istringstream in(text);
  try {
    read_episode_log(in);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("control loss injects bounded steering noise deterministically") {
  Desk desk = straight_desk();
  ScenarioSpec spec;
  spec.template_name = "ControlLoss";
  spec.anchor_s = 30.0;
  spec.trigger_distance = 29.0;
  spec.seed = 3;
  SimWorld a = load_scenario(spec, desk.map, desk.route);
  SimWorld b = load_scenario(spec, desk.map, desk.route);
  int noisy_steps = 0;
  for (int step = 0; step < 3000; ++step) {
    CHECK(a.steer_noise_at(step) == b.steer_noise_at(step));
    if (a.steer_noise_at(step) != 0.0) ++noisy_steps;
  }
  CHECK(noisy_steps == 18);  // 3 impulses x 6 steps
}

TEST_CASE("unknown template and bad anchors are rejected") {
  Desk desk = straight_desk();
  ScenarioSpec spec;
  spec.template_name = "FlyingSaucer";
  spec.anchor_s = 10.0;
  CHECK_THROWS_AS(load_scenario(spec, desk.map, desk.route), Error);
  ScenarioSpec far = crossing_spec(10.0);
  far.anchor_s = 1e6;
  CHECK_THROWS_AS(load_scenario(far, desk.map, desk.route), Error);
  ScenarioSpec bad_trigger = crossing_spec(10.0);
  bad_trigger.trigger_distance = 0.0;
  CHECK_THROWS_AS(load_scenario(bad_trigger, desk.map, desk.route), Error);
}
