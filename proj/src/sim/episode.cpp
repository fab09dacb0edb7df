#include "adbench/sim/episode.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "adbench/error.hpp"

namespace adbench::sim {

using ordered_json = nlohmann::ordered_json;

EpisodeLog run_episode(SimWorld& world, const PlannerFn& planner, int max_steps) {
  if (max_steps <= 0) throw Error(ErrorKind::Config, "max_steps must be positive");

  EpisodeLog log;
  log.meta.dt = world.dt();
  log.route_length = world.route().length;

  while (!world.terminated() && static_cast<int>(log.steps.size()) < max_steps) {
    ControlInput control;
    try {
      control = planner(world.observe());
    } catch (const std::exception&) {
      world.terminate(TerminationReason::PlannerError);
      break;
    }
    world.step(control);

    StepRecord record;
    record.ego = world.ego();
    record.control = control;
    record.progress = world.progress();
    log.steps.push_back(record);

    std::vector<ActorPose> frame;
    for (const Actor& actor : world.actors()) {
      if (!actor.active) continue;
      frame.push_back({actor.id, actor.kind, actor.state.x, actor.state.y, actor.state.psi,
                       actor.state.v});
    }
    log.actor_frames.push_back(std::move(frame));
  }

  if (!world.terminated()) world.terminate(TerminationReason::Timeout);
  log.reason = world.termination_reason();
  log.events = world.events();
  log.distance = std::min(world.progress(), log.route_length);
  return log;
}

namespace {

const char* kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::Vehicle: return "vehicle";
    case AgentKind::Pedestrian: return "pedestrian";
    case AgentKind::Static: return "static";
  }
  return "vehicle";
}

AgentKind kind_from(const std::string& name) {
  if (name == "pedestrian") return AgentKind::Pedestrian;
  if (name == "static") return AgentKind::Static;
  return AgentKind::Vehicle;
}

TerminationReason reason_from(const std::string& name) {
  for (TerminationReason r :
       {TerminationReason::Completed, TerminationReason::Blocked, TerminationReason::Deviated,
        TerminationReason::Timeout, TerminationReason::PlannerError}) {
    if (name == to_string(r)) return r;
  }
  throw Error(ErrorKind::Parse, "unknown termination reason " + name);
}

}  // namespace

void write_episode_log(std::ostream& out, const EpisodeLog& log) {
  ordered_json meta;
  meta["type"] = "meta";
  meta["version"] = 1;
  meta["map"] = log.meta.map_path;
  meta["scenario"] = log.meta.scenario_path;
  meta["planner"] = log.meta.planner;
  meta["seed"] = log.meta.seed;
  meta["dt"] = log.meta.dt;
  meta["route_length"] = log.route_length;
  out << meta.dump() << "\n";

  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const StepRecord& r = log.steps[i];
    ordered_json line;
    line["type"] = "step";
    line["k"] = i;
    line["ego"] = {r.ego.x, r.ego.y, r.ego.psi, r.ego.v};
    line["u"] = {r.control.steer, r.control.accel};
    line["s"] = r.progress;
    if (i < log.actor_frames.size() && !log.actor_frames[i].empty()) {
      ordered_json actors = ordered_json::array();
      for (const ActorPose& a : log.actor_frames[i]) {
        actors.push_back({a.id, kind_name(a.kind), a.x, a.y, a.psi, a.v});
      }
      line["actors"] = std::move(actors);
    }
    out << line.dump() << "\n";
  }

  for (const InfractionEvent& e : log.events) {
    ordered_json line;
    line["type"] = "infraction";
    line["kind"] = to_string(e.kind);
    line["k"] = e.step;
    line["x"] = e.position.x();
    line["y"] = e.position.y();
    if (e.actor_id >= 0) line["actor"] = e.actor_id;
    out << line.dump() << "\n";
  }

  for (const SolverDiagRecord& d : log.solver_records) {
    ordered_json line;
    line["type"] = "solver";
    line["k"] = d.step;
    line["outer"] = d.outer_iterations;
    line["inner"] = d.inner_iterations;
    line["objective"] = d.objective;
    line["violation"] = d.max_violation;
    line["status"] = d.status;
    out << line.dump() << "\n";
  }

  ordered_json end;
  end["type"] = "end";
  end["reason"] = to_string(log.reason);
  end["steps"] = log.steps.size();
  end["distance"] = log.distance;
  out << end.dump() << "\n";
}

std::string serialize_episode_log(const EpisodeLog& log) {
  std::ostringstream out;
  write_episode_log(out, log);
  return out.str();
}

void save_episode_log(const std::string& path, const EpisodeLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  write_episode_log(out, log);
}

EpisodeLog read_episode_log(std::istream& in) {
  EpisodeLog log;
  std::string line;
  int line_no = 0;
  bool saw_meta = false;
  bool saw_end = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, "episode log line " + std::to_string(line_no) + ": " +
                                        e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "meta") {
        saw_meta = true;
        log.meta.map_path = j.at("map").get<std::string>();
        log.meta.scenario_path = j.at("scenario").get<std::string>();
        log.meta.planner = j.at("planner").get<std::string>();
        log.meta.seed = j.at("seed").get<std::uint64_t>();
        log.meta.dt = j.at("dt").get<double>();
        log.route_length = j.at("route_length").get<double>();
      } else if (type == "step") {
        StepRecord r;
        const auto& ego = j.at("ego");
        r.ego = {ego.at(0).get<double>(), ego.at(1).get<double>(), ego.at(2).get<double>(),
                 ego.at(3).get<double>()};
        r.control = {j.at("u").at(0).get<double>(), j.at("u").at(1).get<double>()};
        r.progress = j.at("s").get<double>();
        log.steps.push_back(r);
        std::vector<ActorPose> frame;
        if (j.contains("actors")) {
          for (const auto& a : j.at("actors")) {
            frame.push_back({a.at(0).get<int>(), kind_from(a.at(1).get<std::string>()),
                             a.at(2).get<double>(), a.at(3).get<double>(), a.at(4).get<double>(),
                             a.at(5).get<double>()});
          }
        }
        log.actor_frames.push_back(std::move(frame));
      } else if (type == "infraction") {
        InfractionEvent e;
        const auto kind = infraction_from_string(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorKind::Parse, "unknown infraction kind");
        e.kind = *kind;
        e.step = j.at("k").get<int>();
        e.position = {j.at("x").get<double>(), j.at("y").get<double>()};
        e.actor_id = j.contains("actor") ? j.at("actor").get<int>() : -1;
        log.events.push_back(e);
      } else if (type == "solver") {
        SolverDiagRecord d;
        d.step = j.at("k").get<int>();
        d.outer_iterations = j.at("outer").get<int>();
        d.inner_iterations = j.at("inner").get<int>();
        d.objective = j.at("objective").get<double>();
        d.max_violation = j.at("violation").get<double>();
        d.status = j.at("status").get<std::string>();
        log.solver_records.push_back(d);
      } else if (type == "end") {
        saw_end = true;
        log.reason = reason_from(j.at("reason").get<std::string>());
        log.distance = j.at("distance").get<double>();
      } else {
        throw Error(ErrorKind::Parse, "unknown record type '" + type + "'");
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, "episode log line " + std::to_string(line_no) + ": " +
                                        e.what());
    }
  }

  if (!saw_meta) throw Error(ErrorKind::Parse, "episode log has no meta record (line 1)");
  if (!saw_end) {
    throw Error(ErrorKind::Parse, "episode log truncated: no end record after line " +
                                      std::to_string(line_no));
  }
  return log;
}

EpisodeLog load_episode_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return read_episode_log(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace adbench::sim
