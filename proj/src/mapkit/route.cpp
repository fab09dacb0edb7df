#include "adbench/mapkit/route.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>

#include "adbench/error.hpp"

namespace adbench::mapkit {

Route Route::from_waypoints(std::vector<RouteWaypoint> wps) {
  Route route;
  route.waypoints = std::move(wps);
  route.s.resize(route.waypoints.size(), 0.0);
  for (std::size_t i = 1; i < route.waypoints.size(); ++i) {
    const double d = (route.waypoints[i].position - route.waypoints[i - 1].position).norm();
    route.s[i] = route.s[i - 1] + d;
  }
  route.length = route.s.empty() ? 0.0 : route.s.back();
  return route;
}

std::size_t Route::index_at(double arc) const {
  const auto it = std::lower_bound(s.begin(), s.end(), arc);
  if (it == s.end()) return s.size() - 1;
  return static_cast<std::size_t>(it - s.begin());
}

Vec2 Route::point_at(double arc) const {
  if (waypoints.empty()) return {0.0, 0.0};
  arc = std::clamp(arc, 0.0, length);
  const auto it = std::upper_bound(s.begin(), s.end(), arc);
  if (it == s.begin()) return waypoints.front().position;
  if (it == s.end()) return waypoints.back().position;
  const std::size_t hi = static_cast<std::size_t>(it - s.begin());
  const std::size_t lo = hi - 1;
  const double seg = s[hi] - s[lo];
  const double t = seg > 0.0 ? (arc - s[lo]) / seg : 0.0;
  return waypoints[lo].position + t * (waypoints[hi].position - waypoints[lo].position);
}

double Route::heading_at(double arc) const {
  if (waypoints.empty()) return 0.0;
  arc = std::clamp(arc, 0.0, length);
  const auto it = std::upper_bound(s.begin(), s.end(), arc);
  const std::size_t idx = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
  return waypoints[std::min(idx, waypoints.size() - 1)].heading;
}

double Route::speed_limit_at(double arc) const {
  if (waypoints.empty()) return 0.0;
  arc = std::clamp(arc, 0.0, length);
  const auto it = std::upper_bound(s.begin(), s.end(), arc);
  const std::size_t idx = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
  return waypoints[std::min(idx, waypoints.size() - 1)].speed_limit;
}

void Route::project(const Vec2& p, double& s_out, double& lateral_out) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  s_out = 0.0;
  lateral_out = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec2& a = waypoints[i].position;
    const Vec2& b = waypoints[i + 1].position;
    const Vec2 q = closest_point_on_segment(a, b, p);
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      const double seg_len = (b - a).norm();
      const double t = seg_len > 0.0 ? (q - a).norm() / seg_len : 0.0;
      s_out = s[i] + t * (s[i + 1] - s[i]);
      lateral_out = (p - q).dot(left_normal(waypoints[i].heading));
    }
  }
}

namespace {

constexpr double kLaneChangePenalty = 5.0;  // m-equivalent cost per change

struct Hop {
  int lane = -1;
  bool via_neighbor = false;
};

std::string join_lane_keys(const VectorMap& map, const std::vector<int>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << (i ? ", " : "") << map.lanes[static_cast<std::size_t>(ids[i])].key;
  }
  return out.str();
}

}  // namespace

Route extract_route(const VectorMap& map, int start_lane, double start_s, int goal_lane,
                    double goal_s) {
  const auto valid = [&](int id) {
    return id >= 0 && id < static_cast<int>(map.lanes.size());
  };
  if (!valid(start_lane) || !valid(goal_lane)) {
    throw Error(ErrorKind::NoRoute, "start or goal lane id out of range");
  }

  // Dijkstra over lanes. entry_s[l] is where the path enters lane l; the cost
  // of leaving a lane is its remaining length, a lane change costs a small
  // penalty and keeps the current arc position.
  const std::size_t n = map.lanes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<double> entry_s(n, 0.0);
  std::vector<Hop> parent(n);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

  dist[static_cast<std::size_t>(start_lane)] = 0.0;
  entry_s[static_cast<std::size_t>(start_lane)] = std::clamp(
      start_s, 0.0, map.lanes[static_cast<std::size_t>(start_lane)].length);
  queue.push({0.0, start_lane});

  while (!queue.empty()) {
    const auto [d, lane_id] = queue.top();
    queue.pop();
    const std::size_t li = static_cast<std::size_t>(lane_id);
    if (d > dist[li] + 1e-12) continue;
    const VmLane& lane = map.lanes[li];

    const auto relax = [&](int next, double cost, double next_entry, bool via_neighbor) {
      if (next < 0) return;
      const std::size_t ni = static_cast<std::size_t>(next);
      if (dist[li] + cost < dist[ni] - 1e-12) {
        dist[ni] = dist[li] + cost;
        entry_s[ni] = next_entry;
        parent[ni] = {lane_id, via_neighbor};
        queue.push({dist[ni], next});
      }
    };

    const double remaining = lane.length - entry_s[li];
    for (int succ : lane.successors) relax(succ, std::max(remaining, 0.0), 0.0, false);
    // Neighbor jumps keep the arc position (lanes run parallel).
    for (int nb : {lane.left_neighbor, lane.right_neighbor}) {
      if (nb >= 0) {
        const double s_here = std::min(entry_s[li], map.lanes[static_cast<std::size_t>(nb)].length);
        relax(nb, kLaneChangePenalty, s_here, true);
      }
    }
  }

  const std::size_t gi = static_cast<std::size_t>(goal_lane);
  const bool backwards_on_entry_lane = goal_lane == start_lane && goal_s < start_s - 1e-9;
  if (!std::isfinite(dist[gi]) || backwards_on_entry_lane || entry_s[gi] > goal_s + 1e-9) {
    std::vector<int> reached;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(dist[i])) reached.push_back(static_cast<int>(i));
    }
    throw Error(ErrorKind::NoRoute,
                "goal lane " + map.lanes[gi].key + " at s=" + std::to_string(goal_s) +
                    " is not reachable from " + map.lanes[static_cast<std::size_t>(start_lane)].key +
                    " at s=" + std::to_string(start_s) + "; reachable component: {" +
                    join_lane_keys(map, reached) + "}");
  }

  // Reconstruct lane sequence.
  std::vector<Hop> chain;
  int cursor = goal_lane;
  while (cursor != start_lane) {
    chain.push_back({cursor, parent[static_cast<std::size_t>(cursor)].via_neighbor});
    cursor = parent[static_cast<std::size_t>(cursor)].lane;
    if (chain.size() > n + 1) {
      throw Error(ErrorKind::NoRoute, "route reconstruction cycle");
    }
  }
  chain.push_back({start_lane, false});
  std::reverse(chain.begin(), chain.end());

  // Stitch waypoints. Samples are appended lane by lane; a neighbor hop skips
  // to the next sample boundary on the adjacent lane.
  std::vector<RouteWaypoint> wps;
  const auto append_point = [&](const VmLane& lane, std::size_t index) {
    const MapPoint& mp = lane.points[index];
    if (!wps.empty() && (wps.back().position - mp.position).norm() < 1e-9) return;
    wps.push_back({mp.position, mp.heading, lane.speed_limit});
  };

  double cursor_s = entry_s[static_cast<std::size_t>(start_lane)];
  for (std::size_t ci = 0; ci < chain.size(); ++ci) {
    const VmLane& lane = map.lanes[static_cast<std::size_t>(chain[ci].lane)];
    const bool last = ci + 1 == chain.size();
    const bool next_via_neighbor = !last && chain[ci + 1].via_neighbor;
    const double exit_s = last ? std::clamp(goal_s, 0.0, lane.length)
                          : next_via_neighbor ? entry_s[static_cast<std::size_t>(chain[ci + 1].lane)]
                                              : lane.length;

    std::size_t begin_idx = 0;
    while (begin_idx + 1 < lane.points.size() && lane.cum_s[begin_idx] < cursor_s - 1e-9) {
      ++begin_idx;
    }
    std::size_t end_idx = begin_idx;
    while (end_idx + 1 < lane.points.size() && lane.cum_s[end_idx] < exit_s - 1e-9) {
      ++end_idx;
    }
    for (std::size_t i = begin_idx; i <= end_idx; ++i) append_point(lane, i);
    cursor_s = next_via_neighbor ? exit_s : 0.0;
  }

  if (wps.size() < 2) {
    throw Error(ErrorKind::NoRoute, "route degenerates to fewer than two waypoints");
  }

  // Headings from the stitched polyline so detour jumps stay consistent.
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const Vec2 d = wps[i + 1].position - wps[i].position;
    if (d.norm() > 1e-9) wps[i].heading = std::atan2(d.y(), d.x());
  }
  if (wps.size() >= 2) wps.back().heading = wps[wps.size() - 2].heading;

  return Route::from_waypoints(std::move(wps));
}

Route extract_route(const VectorMap& map, const std::string& start_key, double start_s,
                    const std::string& goal_key, double goal_s) {
  const VmLane* start = map.lane_by_key(start_key);
  const VmLane* goal = map.lane_by_key(goal_key);
  if (!start) throw Error(ErrorKind::NoRoute, "unknown start lane key " + start_key);
  if (!goal) throw Error(ErrorKind::NoRoute, "unknown goal lane key " + goal_key);
  return extract_route(map, start->id, start_s, goal->id, goal_s);
}

}  // namespace adbench::mapkit
