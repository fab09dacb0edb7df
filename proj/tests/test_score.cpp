#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "adbench/error.hpp"
#include "adbench/score.hpp"
#include "oracles.hpp"

using namespace adbench;
using namespace adbench::score;
using sim::EpisodeLog;
using sim::InfractionEvent;
using sim::InfractionKind;

namespace {

InfractionEvent event(InfractionKind kind, int step = 0) {
  InfractionEvent e;
  e.kind = kind;
  e.step = step;
  return e;
}

EpisodeLog make_log(double distance, double length, std::vector<InfractionEvent> events,
                    int steps = 100) {
  EpisodeLog log;
  log.distance = distance;
  log.route_length = length;
  log.events = std::move(events);
  for (int i = 0; i < steps; ++i) {
    sim::StepRecord r;
    r.progress = distance * (i + 1) / steps;
    log.steps.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("route completion basics") {
  CHECK(route_completion(50.0, 100.0) == doctest::Approx(50.0));
  CHECK(route_completion(100.0, 100.0) == doctest::Approx(100.0));
  CHECK(route_completion(333.3, 1000.0) == doctest::Approx(33.33));
  CHECK(route_completion(120.0, 100.0) == 100.0);  // clamped
  CHECK_THROWS_AS(route_completion(1.0, 0.0), Error);
}

TEST_CASE("infraction penalty basics") {
  const PenaltyTable table = PenaltyTable::defaults();
  CHECK(infraction_penalty({}, table) == doctest::Approx(100.0));
  CHECK(infraction_penalty({event(InfractionKind::CollisionPedestrian)}, table) ==
        doctest::Approx(50.0));
  CHECK(infraction_penalty({event(InfractionKind::RedLight), event(InfractionKind::RedLight)},
                           table) == doctest::Approx(49.0));
}

TEST_CASE("missing coefficient names the kind") {
  PenaltyTable table;
  table.coefficients = {{InfractionKind::RedLight, 0.7}};
  try {
    infraction_penalty({event(InfractionKind::CollisionVehicle)}, table);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("collision-vehicle") != std::string::npos);
  }
}

TEST_CASE("driving score is the product with a fractional penalty") {
  CHECK(driving_score(100.0, 100.0) == doctest::Approx(100.0));
  CHECK(driving_score(100.0, 90.5) == doctest::Approx(90.5));
  CHECK(driving_score(50.0, 50.0) == doctest::Approx(25.0));
}

TEST_CASE("penalty matches the log-space oracle on randomized instances") {
  const PenaltyTable table = PenaltyTable::defaults();
  std::map<int, double> coefficients;
  const std::vector<InfractionKind> kinds = {
      InfractionKind::CollisionPedestrian, InfractionKind::CollisionVehicle,
      InfractionKind::CollisionStatic,     InfractionKind::RedLight,
      InfractionKind::StopSignViolation,
  };
  for (const auto& kind : kinds) {
    coefficients[static_cast<int>(kind)] = table.coefficient(kind);
  }

  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> count(0, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<InfractionEvent> events;
    std::map<int, int> counts;
    for (const auto& kind : kinds) {
      const int n = count(rng);
      counts[static_cast<int>(kind)] = n;
      for (int i = 0; i < n; ++i) events.push_back(event(kind));
    }
    const double direct = infraction_penalty(events, table);
    const double oracle = testing::log_space_penalty(counts, coefficients);
    CHECK(std::abs(direct - oracle) < 1e-9);
  }
}

TEST_CASE("penalty is order independent") {
  const PenaltyTable table = PenaltyTable::defaults();
  std::vector<InfractionEvent> events = {
      event(InfractionKind::RedLight), event(InfractionKind::CollisionVehicle),
      event(InfractionKind::StopSignViolation), event(InfractionKind::CollisionPedestrian),
  };
  const double base = infraction_penalty(events, table);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(events.begin(), events.end(), rng);
    CHECK(infraction_penalty(events, table) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("adding an infraction never increases IP or DS") {
  const PenaltyTable table = PenaltyTable::defaults();
  std::vector<InfractionEvent> events;
  double last_ip = infraction_penalty(events, table);
  for (const auto kind :
       {InfractionKind::StopSignViolation, InfractionKind::RedLight,
        InfractionKind::CollisionStatic, InfractionKind::CollisionVehicle,
        InfractionKind::CollisionPedestrian}) {
    events.push_back(event(kind));
    const double ip = infraction_penalty(events, table);
    CHECK(ip <= last_ip);
    CHECK(driving_score(80.0, ip) <= driving_score(80.0, last_ip));
    last_ip = ip;
  }
}

TEST_CASE("single segment covering the route equals the route triple") {
  const PenaltyTable table = PenaltyTable::defaults();
  const EpisodeLog log = make_log(70.0, 100.0, {event(InfractionKind::RedLight, 10)});
  const std::vector<SegmentTag> segments = build_segments({}, 100.0);
  REQUIRE(segments.size() == 1);
  const RouteResult result = score_route("r0", "m0", "rule", log, segments, table);
  REQUIRE(result.segments.size() == 1);
  CHECK(result.segments[0].rc == doctest::Approx(result.rc));
  CHECK(result.segments[0].ip == doctest::Approx(result.ip));
  CHECK(result.segments[0].ds == doctest::Approx(result.ds));
  CHECK(result.ds == doctest::Approx(result.rc * result.ip / 100.0).epsilon(1e-9));
}

TEST_CASE("events only in the second segment leave the first clean") {
  const PenaltyTable table = PenaltyTable::defaults();
  // Event at step 79 of 100: progress 80 of 100 m -> second half.
  const EpisodeLog log = make_log(100.0, 100.0, {event(InfractionKind::CollisionVehicle, 79)});
  sim::ScenarioSpec spec;
  spec.template_name = "ConstructionObstacle";
  spec.anchor_s = 70.0;
  spec.trigger_distance = 20.0;
  spec.params["extent"] = 30.0;
  const auto segments = build_segments({spec}, 100.0);
  REQUIRE(segments.size() == 2);  // filler [0,50) + tagged [50,100]
  const RouteResult result = score_route("r0", "m0", "rule", log, segments, table);
  CHECK(result.segments[0].ip == doctest::Approx(100.0));
  CHECK(result.segments[1].ip == doctest::Approx(60.0));
}

TEST_CASE("template aggregate is the unweighted mean") {
  const PenaltyTable table = PenaltyTable::defaults();
  std::vector<RouteResult> results;
  const double ds_values[3] = {80.0, 90.0, 100.0};
  for (int i = 0; i < 3; ++i) {
    sim::ScenarioSpec spec;
    spec.template_name = "DynamicObjectCrossing";
    spec.anchor_s = 50.0;
    spec.trigger_distance = 20.0;
    const auto segments = build_segments({spec}, 100.0);
    const EpisodeLog log = make_log(ds_values[i], 100.0, {});
    results.push_back(score_route("r" + std::to_string(i), "m0", "rule", log, segments, table));
  }
  // Overwrite segment scores to the exact triples for the mean check.
  for (int i = 0; i < 3; ++i) {
    for (auto& seg : results[static_cast<std::size_t>(i)].segments) {
      if (!seg.tag.filler) {
        seg.ds = ds_values[i];
        seg.rc = ds_values[i];
        seg.ip = 100.0;
      }
    }
  }
  const ScoreReport report = decompose_and_aggregate(results);
  REQUIRE(report.per_template.size() == 1);
  CHECK(report.per_template[0].name == "DynamicObjectCrossing");
  CHECK(report.per_template[0].ds == doctest::Approx(90.0));
}

TEST_CASE("grand mean equals the mean of per-route driving scores") {
  const PenaltyTable table = PenaltyTable::defaults();
  std::vector<RouteResult> results;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(10.0, 100.0);
  double sum_ds = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double traversed = dist(rng);
    std::vector<InfractionEvent> events;
    if (i % 3 == 0) events.push_back(event(InfractionKind::RedLight, 5));
    const EpisodeLog log = make_log(traversed, 100.0, events);
    const auto segments = build_segments({}, 100.0);
    results.push_back(score_route("r" + std::to_string(i), i % 2 ? "a" : "b", "rule", log,
                                  segments, table));
    sum_ds += results.back().ds;
  }
  const ScoreReport report = decompose_and_aggregate(results);
  CHECK(report.grand.ds == doctest::Approx(sum_ds / 11.0).epsilon(1e-9));
  CHECK(report.per_map.size() == 2);
}

TEST_CASE("segment completions recompose to the route completion") {
  const PenaltyTable table = PenaltyTable::defaults();
  sim::ScenarioSpec a, b;
  a.template_name = "ConstructionObstacle";
  a.anchor_s = 30.0;
  a.trigger_distance = 10.0;
  a.params["extent"] = 20.0;
  b.template_name = "DynamicObjectCrossing";
  b.anchor_s = 80.0;
  b.trigger_distance = 10.0;
  b.params["extent"] = 15.0;
  const auto segments = build_segments({a, b}, 120.0);

  for (double traversed : {17.0, 43.0, 77.5, 120.0}) {
    const EpisodeLog log = make_log(traversed, 120.0, {});
    const RouteResult result = score_route("r", "m", "rule", log, segments, table);
    double weighted = 0.0;
    for (const auto& seg : result.segments) {
      weighted += seg.rc * (seg.tag.end_s - seg.tag.begin_s);
    }
    CHECK(weighted / 120.0 == doctest::Approx(result.rc).epsilon(1e-6));
  }
}

TEST_CASE("overlapping segments raise a partition error") {
  sim::ScenarioSpec a, b;
  a.template_name = "ConstructionObstacle";
  a.anchor_s = 30.0;
  a.trigger_distance = 10.0;
  a.params["extent"] = 40.0;
  b.template_name = "DynamicObjectCrossing";
  b.anchor_s = 50.0;
  b.trigger_distance = 10.0;
  CHECK_THROWS_AS(build_segments({a, b}, 120.0), Error);
}

TEST_CASE("report renderers include every section") {
  const PenaltyTable table = PenaltyTable::defaults();
  sim::ScenarioSpec spec;
  spec.template_name = "DynamicObjectCrossing";
  spec.anchor_s = 50.0;
  spec.trigger_distance = 20.0;
  const EpisodeLog log = make_log(90.0, 100.0, {event(InfractionKind::CollisionPedestrian, 50)});
  const auto segments = build_segments({spec}, 100.0);
  const RouteResult result = score_route("route_0", "desk_straight", "rule", log, segments, table);
  const ScoreReport report = decompose_and_aggregate({result});

  const std::string text = render_report_text(report);
  CHECK(text.find("route_0") != std::string::npos);
  CHECK(text.find("DynamicObjectCrossing") != std::string::npos);
  CHECK(text.find("desk_straight") != std::string::npos);

  const std::string csv = render_report_csv(report);
  CHECK(csv.find("route,route_0,rule,") != std::string::npos);
  CHECK(csv.find("grand,all,,") != std::string::npos);
}
