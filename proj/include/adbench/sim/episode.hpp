#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "adbench/sim/world.hpp"

namespace adbench::sim {

struct StepRecord {
  EgoState ego;          // state after the step
  ControlInput control;  // control applied during the step
  double progress = 0.0;
};

struct ActorPose {
  int id = -1;
  AgentKind kind = AgentKind::Vehicle;
  double x = 0.0, y = 0.0, psi = 0.0, v = 0.0;
};

// Per-step planner diagnostics (receding-horizon solver extension records).
struct SolverDiagRecord {
  int step = 0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  std::string status;
};

struct EpisodeMeta {
  std::string map_path;
  std::string scenario_path;
  std::string planner;
  std::uint64_t seed = 0;
  double dt = 0.05;
};

struct EpisodeLog {
  EpisodeMeta meta;
  double route_length = 0.0;
  std::vector<StepRecord> steps;
  std::vector<std::vector<ActorPose>> actor_frames;  // aligned with steps
  std::vector<InfractionEvent> events;
  std::vector<SolverDiagRecord> solver_records;
  TerminationReason reason = TerminationReason::Timeout;
  double distance = 0.0;  // arc length traversed along the route
};

using PlannerFn = std::function<ControlInput(const Observation&)>;

// Runs the closed loop until completion, deviation, block, planner failure or
// the step cap. The log is complete and replayable either way.
EpisodeLog run_episode(SimWorld& world, const PlannerFn& planner, int max_steps);

// Line-delimited structured records; every line is one JSON object with a
// "type" tag. Deterministic byte-for-byte for identical logs.
void write_episode_log(std::ostream& out, const EpisodeLog& log);
std::string serialize_episode_log(const EpisodeLog& log);
void save_episode_log(const std::string& path, const EpisodeLog& log);

// Throws ErrorKind::Parse naming the offending line on corrupt input.
EpisodeLog read_episode_log(std::istream& in);
EpisodeLog load_episode_log(const std::string& path);

}  // namespace adbench::sim
