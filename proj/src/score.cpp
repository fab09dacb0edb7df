#include "adbench/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "adbench/error.hpp"

namespace adbench::score {

PenaltyTable PenaltyTable::defaults() {
  PenaltyTable table;
  table.coefficients = {
      {InfractionKind::CollisionPedestrian, 0.50},
      {InfractionKind::CollisionVehicle, 0.60},
      {InfractionKind::CollisionStatic, 0.65},
      {InfractionKind::RedLight, 0.70},
      {InfractionKind::StopSignViolation, 0.80},
      {InfractionKind::RouteDeviation, 1.00},
      {InfractionKind::AgentBlocked, 1.00},
  };
  return table;
}

double PenaltyTable::coefficient(InfractionKind kind) const {
  const auto it = coefficients.find(kind);
  if (it == coefficients.end()) {
    throw Error(ErrorKind::Config,
                std::string("penalty table has no coefficient for '") + to_string(kind) + "'");
  }
  if (!(it->second > 0.0 && it->second <= 1.0)) {
    throw Error(ErrorKind::Config,
                std::string("penalty coefficient for '") + to_string(kind) + "' not in (0, 1]");
  }
  return it->second;
}

double route_completion(double distance_traversed, double route_length) {
  if (route_length <= 0.0) {
    throw Error(ErrorKind::Config, "route completion undefined for a zero-length route");
  }
  return std::clamp(100.0 * distance_traversed / route_length, 0.0, 100.0);
}

double route_completion(const EpisodeLog& log) {
  return route_completion(log.distance, log.route_length);
}

double infraction_penalty(const std::vector<InfractionEvent>& events, const PenaltyTable& table) {
  double penalty = 100.0;
  for (const InfractionEvent& event : events) {
    penalty *= table.coefficient(event.kind);
  }
  return penalty;
}

double driving_score(double rc, double ip) { return rc * ip / 100.0; }

std::vector<SegmentTag> build_segments(const std::vector<sim::ScenarioSpec>& specs,
                                       double route_length, double default_extent) {
  std::vector<SegmentTag> tagged;
  for (const auto& spec : specs) {
    SegmentTag tag;
    tag.template_name = spec.template_name;
    tag.begin_s = std::max(0.0, spec.anchor_s - spec.trigger_distance);
    tag.end_s = std::min(route_length, spec.anchor_s + spec.param("extent", default_extent));
    tagged.push_back(tag);
  }
  std::sort(tagged.begin(), tagged.end(),
            [](const SegmentTag& a, const SegmentTag& b) { return a.begin_s < b.begin_s; });
  for (std::size_t i = 1; i < tagged.size(); ++i) {
    if (tagged[i].begin_s < tagged[i - 1].end_s - 1e-9) {
      throw Error(ErrorKind::Partition, "scenario segments overlap: [" +
                                            std::to_string(tagged[i - 1].begin_s) + ", " +
                                            std::to_string(tagged[i - 1].end_s) + ") and [" +
                                            std::to_string(tagged[i].begin_s) + ", " +
                                            std::to_string(tagged[i].end_s) + ")");
    }
  }

  // Fill the gaps so the segments partition [0, route_length].
  std::vector<SegmentTag> segments;
  double cursor = 0.0;
  for (const SegmentTag& tag : tagged) {
    if (tag.begin_s > cursor + 1e-9) {
      segments.push_back({"", cursor, tag.begin_s, true});
    }
    segments.push_back(tag);
    cursor = tag.end_s;
  }
  if (cursor < route_length - 1e-9) {
    segments.push_back({"", cursor, route_length, true});
  }
  if (segments.empty()) {
    segments.push_back({"", 0.0, route_length, true});
  }
  return segments;
}

RouteResult score_route(const std::string& route_id, const std::string& map_id,
                        const std::string& planner, const EpisodeLog& log,
                        const std::vector<SegmentTag>& segments, const PenaltyTable& table) {
  RouteResult result;
  result.route_id = route_id;
  result.map_id = map_id;
  result.planner = planner;
  result.rc = route_completion(log);
  result.ip = infraction_penalty(log.events, table);
  result.ds = driving_score(result.rc, result.ip);
  for (const InfractionEvent& event : log.events) result.counts[event.kind]++;

  // Events are attributed to segments by the progress the ego had reached at
  // the event step (route arc length).
  const auto event_arc = [&](const InfractionEvent& event) {
    const std::size_t idx = static_cast<std::size_t>(std::max(event.step, 0));
    if (idx < log.steps.size()) return log.steps[idx].progress;
    return log.steps.empty() ? 0.0 : log.steps.back().progress;
  };

  for (const SegmentTag& tag : segments) {
    SegmentResult seg;
    seg.tag = tag;
    const double length = tag.end_s - tag.begin_s;
    const double covered = std::clamp(log.distance, tag.begin_s, tag.end_s) - tag.begin_s;
    seg.rc = length > 0.0 ? std::clamp(100.0 * covered / length, 0.0, 100.0) : 100.0;

    std::vector<InfractionEvent> local;
    for (const InfractionEvent& event : log.events) {
      const double s = event_arc(event);
      const bool last = &tag == &segments.back();
      if (s >= tag.begin_s && (s < tag.end_s || (last && s <= tag.end_s + 1e-9))) {
        local.push_back(event);
      }
    }
    seg.events = static_cast<int>(local.size());
    seg.ip = infraction_penalty(local, table);
    seg.ds = driving_score(seg.rc, seg.ip);
    result.segments.push_back(std::move(seg));
  }
  return result;
}

namespace {

AggregateRow mean_row(const std::string& name, const std::vector<const RouteResult*>& rows) {
  AggregateRow out;
  out.name = name;
  out.count = static_cast<int>(rows.size());
  for (const RouteResult* r : rows) {
    out.ds += r->ds;
    out.rc += r->rc;
    out.ip += r->ip;
  }
  if (!rows.empty()) {
    out.ds /= out.count;
    out.rc /= out.count;
    out.ip /= out.count;
  }
  return out;
}

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%7.1f", v);
  return buf;
}

std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ScoreReport decompose_and_aggregate(const std::vector<RouteResult>& results) {
  ScoreReport report;
  report.routes = results;

  // Per-template means over tagged segments, in catalog order.
  for (const std::string& name : sim::scenario_catalog()) {
    AggregateRow row;
    row.name = name;
    for (const RouteResult& route : results) {
      for (const SegmentResult& seg : route.segments) {
        if (seg.tag.template_name != name) continue;
        row.count++;
        row.ds += seg.ds;
        row.rc += seg.rc;
        row.ip += seg.ip;
      }
    }
    if (row.count > 0) {
      row.ds /= row.count;
      row.rc /= row.count;
      row.ip /= row.count;
      report.per_template.push_back(row);
    }
  }

  // Per-map means over routes, in first-seen order.
  std::vector<std::string> map_order;
  for (const RouteResult& route : results) {
    if (std::find(map_order.begin(), map_order.end(), route.map_id) == map_order.end()) {
      map_order.push_back(route.map_id);
    }
  }
  for (const std::string& map_id : map_order) {
    std::vector<const RouteResult*> rows;
    for (const RouteResult& route : results) {
      if (route.map_id == map_id) rows.push_back(&route);
    }
    report.per_map.push_back(mean_row(map_id, rows));
  }

  std::vector<const RouteResult*> all;
  for (const RouteResult& route : results) all.push_back(&route);
  report.grand = mean_row("all", all);
  return report;
}

std::string render_report_text(const ScoreReport& report) {
  std::ostringstream out;
  const auto rule = [&](std::size_t width) { out << std::string(width, '-') << "\n"; };
  const std::size_t name_width = 34;

  const auto header = [&](const char* title) {
    out << title << "\n";
    out << std::string(name_width, ' ') << "     DS      RC      IP\n";
    rule(name_width + 24);
  };
  const auto row = [&](const std::string& name, double ds, double rc, double ip) {
    std::string padded = name;
    if (padded.size() < name_width) padded.resize(name_width, ' ');
    out << padded << format_cell(ds) << " " << format_cell(rc) << " " << format_cell(ip) << "\n";
  };

  header("Routes");
  for (const RouteResult& route : report.routes) {
    row(route.route_id + " (" + route.planner + ")", route.ds, route.rc, route.ip);
  }
  out << "\n";

  if (!report.per_template.empty()) {
    header("Scenario templates");
    for (const AggregateRow& r : report.per_template) row(r.name, r.ds, r.rc, r.ip);
    out << "\n";
  }

  header("Maps");
  for (const AggregateRow& r : report.per_map) row(r.name, r.ds, r.rc, r.ip);
  out << "\n";

  header("Overall");
  row("mean over routes", report.grand.ds, report.grand.rc, report.grand.ip);
  return out.str();
}

std::string render_report_csv(const ScoreReport& report) {
  std::ostringstream out;
  out << "kind,name,planner,ds,rc,ip,count\n";
  for (const RouteResult& route : report.routes) {
    out << "route," << route.route_id << "," << route.planner << "," << format_value(route.ds)
        << "," << format_value(route.rc) << "," << format_value(route.ip) << ",1\n";
    for (const SegmentResult& seg : route.segments) {
      if (seg.tag.filler) continue;
      out << "segment," << route.route_id << ":" << seg.tag.template_name << "," << route.planner
          << "," << format_value(seg.ds) << "," << format_value(seg.rc) << ","
          << format_value(seg.ip) << ",1\n";
    }
  }
  for (const AggregateRow& r : report.per_template) {
    out << "template," << r.name << ",," << format_value(r.ds) << "," << format_value(r.rc) << ","
        << format_value(r.ip) << "," << r.count << "\n";
  }
  for (const AggregateRow& r : report.per_map) {
    out << "map," << r.name << ",," << format_value(r.ds) << "," << format_value(r.rc) << ","
        << format_value(r.ip) << "," << r.count << "\n";
  }
  out << "grand,all,," << format_value(report.grand.ds) << "," << format_value(report.grand.rc)
      << "," << format_value(report.grand.ip) << "," << report.grand.count << "\n";
  return out.str();
}

}  // namespace adbench::score
