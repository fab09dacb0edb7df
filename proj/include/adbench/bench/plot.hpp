#pragma once

#include <string>

#include "adbench/mapkit/vector_map.hpp"
#include "adbench/sim/episode.hpp"

namespace adbench::bench {

// Static top-down SVG: lane ribbons, the ego trace, actor traces, and
// infraction markers.
std::string render_episode_svg(const sim::EpisodeLog& log, const mapkit::VectorMap* map);

}  // namespace adbench::bench
