#include "adbench/bench/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace adbench::bench {

namespace {

struct Frame {
  double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;

  void include(const Vec2& p) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_episode_svg(const sim::EpisodeLog& log, const mapkit::VectorMap* map) {
  Frame frame;
  if (map) {
    for (const auto& lane : map->lanes) {
      for (const auto& p : lane.points) frame.include(p.position);
    }
  }
  for (const auto& step : log.steps) frame.include({step.ego.x, step.ego.y});
  for (const auto& actors : log.actor_frames) {
    for (const auto& a : actors) frame.include({a.x, a.y});
  }
  if (frame.min_x > frame.max_x) {
    frame = {};
    frame.include({0, 0});
    frame.include({10, 10});
  }

  const double pad = 10.0;
  frame.min_x -= pad;
  frame.min_y -= pad;
  frame.max_x += pad;
  frame.max_y += pad;
  const double world_w = frame.max_x - frame.min_x;
  const double world_h = frame.max_y - frame.min_y;
  const double width = 1000.0;
  const double scale = width / world_w;
  const double height = world_h * scale;

  // SVG y grows downward; the map frame keeps y up.
  const auto sx = [&](double x) { return (x - frame.min_x) * scale; };
  const auto sy = [&](double y) { return height - (y - frame.min_y) * scale; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";

  if (map) {
    for (const auto& lane : map->lanes) {
      out << "<polyline fill=\"none\" stroke=\"#d8d8d8\" stroke-linecap=\"round\" stroke-width=\""
          << num(lane.points.empty() ? 1.0 : lane.points.front().width * scale) << "\" points=\"";
      for (const auto& p : lane.points) {
        out << num(sx(p.position.x())) << "," << num(sy(p.position.y())) << " ";
      }
      out << "\"/>\n";
      out << "<polyline fill=\"none\" stroke=\"#bdbdbd\" stroke-width=\"1\" stroke-dasharray=\"6 6\" points=\"";
      for (const auto& p : lane.points) {
        out << num(sx(p.position.x())) << "," << num(sy(p.position.y())) << " ";
      }
      out << "\"/>\n";
    }
    for (const auto& cw : map->crosswalks) {
      out << "<polygon fill=\"#e8e2cf\" stroke=\"#c9c09f\" points=\"";
      for (const auto& c : cw.corners) out << num(sx(c.x())) << "," << num(sy(c.y())) << " ";
      out << "\"/>\n";
    }
    for (const auto& line : map->stop_lines) {
      out << "<line stroke=\"#888\" stroke-width=\"2\" x1=\"" << num(sx(line.a.x())) << "\" y1=\""
          << num(sy(line.a.y())) << "\" x2=\"" << num(sx(line.b.x())) << "\" y2=\""
          << num(sy(line.b.y())) << "\"/>\n";
    }
  }

  // Actor traces, one polyline per id.
  std::map<int, std::vector<Vec2>> traces;
  std::map<int, AgentKind> kinds;
  for (const auto& actors : log.actor_frames) {
    for (const auto& a : actors) {
      traces[a.id].push_back({a.x, a.y});
      kinds[a.id] = a.kind;
    }
  }
  for (const auto& [id, pts] : traces) {
    const char* color = kinds[id] == AgentKind::Pedestrian ? "#c77dff"
                        : kinds[id] == AgentKind::Static   ? "#8d6e63"
                                                           : "#fb8c00";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) out << num(sx(p.x())) << "," << num(sy(p.y())) << " ";
    out << "\"/>\n";
    if (!pts.empty()) {
      out << "<circle fill=\"" << color << "\" r=\"3\" cx=\"" << num(sx(pts.back().x()))
          << "\" cy=\"" << num(sy(pts.back().y())) << "\"/>\n";
    }
  }

  // Ego trace.
  out << "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"2.5\" points=\"";
  for (const auto& step : log.steps) out << num(sx(step.ego.x)) << "," << num(sy(step.ego.y)) << " ";
  out << "\"/>\n";
  if (!log.steps.empty()) {
    out << "<circle fill=\"#1565c0\" r=\"4\" cx=\"" << num(sx(log.steps.back().ego.x))
        << "\" cy=\"" << num(sy(log.steps.back().ego.y)) << "\"/>\n";
  }

  // Infraction markers.
  for (const auto& e : log.events) {
    const double x = sx(e.position.x());
    const double y = sy(e.position.y());
    out << "<g stroke=\"#d32f2f\" stroke-width=\"2.5\">"
        << "<line x1=\"" << num(x - 6) << "\" y1=\"" << num(y - 6) << "\" x2=\"" << num(x + 6)
        << "\" y2=\"" << num(y + 6) << "\"/>"
        << "<line x1=\"" << num(x - 6) << "\" y1=\"" << num(y + 6) << "\" x2=\"" << num(x + 6)
        << "\" y2=\"" << num(y - 6) << "\"/></g>\n";
    out << "<title>" << to_string(e.kind) << "</title>\n";
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace adbench::bench
