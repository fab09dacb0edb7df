#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adbench/models.hpp"
#include "adbench/planner/mpc_planner.hpp"
#include "adbench/planner/rule_planner.hpp"
#include "adbench/score.hpp"
#include "adbench/sim/world.hpp"

namespace adbench::bench {

// One scenario file: a route on a map plus an ordered list of scenario
// instances.
struct ScenarioFile {
  std::string name;
  std::string path;
  std::string map_path;
  std::string start_lane;
  double start_s = 0.0;
  std::string goal_lane;
  double goal_s = 0.0;
  std::vector<sim::ScenarioSpec> scenarios;
};

struct BenchConfig {
  int version = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output_dir = "out";
  std::vector<std::string> planners = {"rule"};
  std::vector<std::string> scenario_files;
  int max_steps = 6000;
  double map_spacing = 0.5;
  double default_speed_limit = 13.89;
  double segment_extent = 50.0;
  sim::SimParams sim;
  planner::RulePlannerConfig rule_planner;
  planner::MpcParams mpc_planner;
  score::PenaltyTable penalties = score::PenaltyTable::defaults();

  // Directory of the config file, used to resolve relative paths.
  std::string base_dir;
};

// Parses the structured-text (JSON) config. Unknown planner names, missing
// files and malformed sections raise ErrorKind::Config.
BenchConfig load_config(const std::string& path);
BenchConfig parse_config(const std::string& text, const std::string& base_dir);

ScenarioFile load_scenario_file(const std::string& path);

// Fully-resolved defaults in the config format.
std::string default_config_text();

// Resolves a possibly-relative path against the config base directory.
std::string resolve_path(const BenchConfig& config, const std::string& path);

}  // namespace adbench::bench
