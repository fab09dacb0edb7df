#pragma once

#include <map>
#include <string>
#include <vector>

#include "adbench/sim/episode.hpp"
#include "adbench/sim/scenario.hpp"

namespace adbench::score {

using sim::EpisodeLog;
using sim::InfractionEvent;
using sim::InfractionKind;

// Multiplicative penalty coefficients per infraction kind, in (0, 1].
struct PenaltyTable {
  std::map<InfractionKind, double> coefficients;

  // Leaderboard-convention defaults: collisions 0.50/0.60/0.65, red light
  // 0.70, stop sign 0.80; blocked and deviation flow through the route
  // completion instead and carry coefficient 1.
  static PenaltyTable defaults();

  double coefficient(InfractionKind kind) const;  // throws ErrorKind::Config when missing
};

// RC = 100 * distance traversed / total route distance, clamped to [0, 100].
double route_completion(double distance_traversed, double route_length);
double route_completion(const EpisodeLog& log);

// IP = 100 * prod_j p_j^{n_j}.
double infraction_penalty(const std::vector<InfractionEvent>& events, const PenaltyTable& table);

// DS = rc * ip / 100 (the penalty read as a fraction).
double driving_score(double rc, double ip);

// One scored scenario segment: an s-interval of the route plus the events
// attributed to it.
struct SegmentTag {
  std::string template_name;  // empty for untagged filler segments
  double begin_s = 0.0;
  double end_s = 0.0;
  bool filler = false;
};

struct SegmentResult {
  SegmentTag tag;
  double rc = 0.0;
  double ip = 0.0;
  double ds = 0.0;
  int events = 0;
};

struct RouteResult {
  std::string route_id;
  std::string map_id;
  std::string planner;
  double rc = 0.0;
  double ip = 0.0;
  double ds = 0.0;
  std::map<InfractionKind, int> counts;
  std::vector<SegmentResult> segments;
};

// Builds the segment partition for a route: one tagged segment per scenario
// instance spanning [anchor - trigger, anchor + extent], fillers in between.
// Overlapping tagged segments raise ErrorKind::Partition.
std::vector<SegmentTag> build_segments(const std::vector<sim::ScenarioSpec>& specs,
                                       double route_length, double default_extent = 50.0);

// Scores one episode, attributing events and distance to segments by the
// route arc length of the event position.
RouteResult score_route(const std::string& route_id, const std::string& map_id,
                        const std::string& planner, const EpisodeLog& log,
                        const std::vector<SegmentTag>& segments, const PenaltyTable& table);

struct AggregateRow {
  std::string name;
  int count = 0;
  double ds = 0.0;
  double rc = 0.0;
  double ip = 0.0;
};

struct ScoreReport {
  std::vector<RouteResult> routes;
  std::vector<AggregateRow> per_template;  // unweighted means over tagged segments
  std::vector<AggregateRow> per_map;       // unweighted means over routes
  AggregateRow grand;                      // unweighted means over routes
};

ScoreReport decompose_and_aggregate(const std::vector<RouteResult>& results);

// Aligned plain-text tables (per-map and per-scenario blocks) and a
// machine-readable delimited form.
std::string render_report_text(const ScoreReport& report);
std::string render_report_csv(const ScoreReport& report);

}  // namespace adbench::score
