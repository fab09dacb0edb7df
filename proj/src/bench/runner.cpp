#include "adbench/bench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "adbench/error.hpp"
#include "adbench/mapkit/opendrive.hpp"
#include "adbench/mapkit/route.hpp"
#include "adbench/mapkit/vector_map.hpp"
#include "adbench/planner/mpc_planner.hpp"
#include "adbench/planner/rule_planner.hpp"
#include "adbench/sim/episode.hpp"

namespace adbench::bench {

namespace fs = std::filesystem;
using mapkit::Route;
using mapkit::VectorMap;

bool glob_match(const std::string& pattern, const std::string& text) {
  if (pattern.empty()) return true;
  // Iterative wildcard match with backtracking over '*'.
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

struct Cell {
  std::string planner;
  ScenarioFile scenario;
  std::uint64_t seed = 0;
};

struct LoadedScene {
  std::shared_ptr<const VectorMap> map;
  std::shared_ptr<const Route> route;
  std::vector<score::SegmentTag> segments;
};

// Scenario seeds are folded with the global seed so --seed re-randomizes
// every instance deterministically.
std::uint64_t fold_seed(std::uint64_t global, std::uint64_t local) {
  SplitMix64 rng(global * 0x9e3779b97f4a7c15ULL + local + 1);
  return rng.next();
}

LoadedScene load_scene(const BenchConfig& config, const ScenarioFile& scenario,
                       std::map<std::string, std::shared_ptr<const VectorMap>>& map_cache,
                       std::mutex& cache_mutex) {
  const std::string map_path = scenario.map_path;  // already resolved by the loader
  std::shared_ptr<const VectorMap> map;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = map_cache.find(map_path);
    if (it != map_cache.end()) {
      map = it->second;
    }
  }
  if (!map) {
    auto built = std::make_shared<VectorMap>(
        mapkit::build_vector_map(mapkit::load_opendrive_file(map_path), config.map_spacing,
                                 config.default_speed_limit));
    std::lock_guard<std::mutex> lock(cache_mutex);
    map_cache.emplace(map_path, built);
    map = built;
  }

  LoadedScene scene;
  scene.map = map;
  scene.route = std::make_shared<Route>(mapkit::extract_route(
      *map, scenario.start_lane, scenario.start_s, scenario.goal_lane, scenario.goal_s));
  scene.segments =
      score::build_segments(scenario.scenarios, scene.route->length, config.segment_extent);
  return scene;
}

sim::EpisodeLog run_cell(const BenchConfig& config, const Cell& cell, const LoadedScene& scene) {
  std::vector<sim::ScenarioSpec> specs = cell.scenario.scenarios;
  for (auto& spec : specs) spec.seed = fold_seed(cell.seed, spec.seed);

  sim::SimWorld world(scene.map, scene.route, specs, config.sim);
  sim::EpisodeLog log;
  if (cell.planner == "rule") {
    planner::RulePlanner rule(scene.route, config.rule_planner);
    log = sim::run_episode(
        world, [&](const sim::Observation& obs) { return rule.plan(obs); }, config.max_steps);
  } else if (cell.planner == "mpc") {
    planner::MpcPlanner mpc(scene.route, config.mpc_planner);
    log = sim::run_episode(
        world, [&](const sim::Observation& obs) { return mpc.plan(obs); }, config.max_steps);
    log.solver_records = mpc.diagnostics();
  } else {
    throw Error(ErrorKind::Config, "planner '" + cell.planner + "' cannot run episodes");
  }
  log.meta.map_path = cell.scenario.map_path;
  log.meta.scenario_path = cell.scenario.path;
  log.meta.planner = cell.planner;
  log.meta.seed = cell.seed;
  return log;
}

void write_manifest(const std::string& out_dir, const std::vector<std::string>& files) {
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  std::ofstream out(fs::path(out_dir) / "manifest.txt", std::ios::binary);
  for (const std::string& name : sorted) {
    const std::string text = mapkit::read_text_file((fs::path(out_dir) / name).string());
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    out << name << " fnv1a64:" << hash << " bytes:" << text.size() << "\n";
  }
}

}  // namespace

BenchSummary run_benchmark(const BenchConfig& config, const std::string& filter_glob) {
  if (config.scenario_files.empty()) {
    throw Error(ErrorKind::Config, "config lists no scenario files");
  }

  std::vector<Cell> cells;
  for (const std::string& planner : config.planners) {
    for (const std::string& file : config.scenario_files) {
      ScenarioFile scenario = load_scenario_file(resolve_path(config, file));
      if (!filter_glob.empty() && !glob_match(filter_glob, scenario.name)) continue;
      cells.push_back({planner, std::move(scenario), config.seed});
    }
  }
  if (cells.empty()) {
    throw Error(ErrorKind::Config, "no scenario matches the filter");
  }

  fs::create_directories(config.output_dir);

  std::map<std::string, std::shared_ptr<const VectorMap>> map_cache;
  std::mutex cache_mutex;

  BenchSummary summary;
  summary.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(cells.size())));
  const auto work = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= cells.size()) return;
      const Cell& cell = cells[index];
      CellOutcome& outcome = summary.cells[index];
      outcome.planner = cell.planner;
      outcome.scenario_name = cell.scenario.name;
      try {
        const LoadedScene scene = load_scene(config, cell.scenario, map_cache, cache_mutex);
        const sim::EpisodeLog log = run_cell(config, cell, scene);
        const std::string file_name = "ep_" + cell.planner + "_" + cell.scenario.name + ".jsonl";
        const std::string path = (fs::path(config.output_dir) / file_name).string();
        sim::save_episode_log(path, log);
        outcome.log_path = path;
        outcome.result = score::score_route(cell.scenario.name, cell.scenario.map_path,
                                            cell.planner, log, scene.segments, config.penalties);
        outcome.ok = true;
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  std::vector<score::RouteResult> results;
  std::vector<std::string> artifacts;
  for (const CellOutcome& outcome : summary.cells) {
    if (outcome.ok) {
      results.push_back(outcome.result);
      artifacts.push_back(fs::path(outcome.log_path).filename().string());
    } else {
      ++summary.failures;
    }
  }
  summary.report = score::decompose_and_aggregate(results);

  const std::string text = score::render_report_text(summary.report);
  const std::string csv = score::render_report_csv(summary.report);
  summary.report_text_path = (fs::path(config.output_dir) / "report.txt").string();
  summary.report_csv_path = (fs::path(config.output_dir) / "report.csv").string();
  {
    std::ofstream out(summary.report_text_path, std::ios::binary);
    out << text;
  }
  {
    std::ofstream out(summary.report_csv_path, std::ios::binary);
    out << csv;
  }
  artifacts.push_back("report.txt");
  artifacts.push_back("report.csv");
  write_manifest(config.output_dir, artifacts);
  return summary;
}

BenchSummary rescore_logs(const BenchConfig& config, const std::string& log_dir) {
  std::vector<std::string> log_files;
  for (const auto& entry : fs::directory_iterator(log_dir)) {
    if (entry.path().extension() == ".jsonl") log_files.push_back(entry.path().string());
  }
  std::sort(log_files.begin(), log_files.end());
  if (log_files.empty()) {
    throw Error(ErrorKind::Config, "no .jsonl episode logs under " + log_dir);
  }

  BenchSummary summary;
  std::vector<score::RouteResult> results;
  for (const std::string& path : log_files) {
    CellOutcome outcome;
    outcome.log_path = path;
    try {
      const sim::EpisodeLog log = sim::load_episode_log(path);
      const ScenarioFile scenario =
          load_scenario_file(resolve_path(config, log.meta.scenario_path));
      const auto segments = score::build_segments(
          scenario.scenarios, log.route_length, config.segment_extent);
      outcome.planner = log.meta.planner;
      outcome.scenario_name = scenario.name;
      outcome.result = score::score_route(scenario.name, log.meta.map_path, log.meta.planner, log,
                                          segments, config.penalties);
      outcome.ok = true;
      results.push_back(outcome.result);
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
      ++summary.failures;
    }
    summary.cells.push_back(std::move(outcome));
  }
  summary.report = score::decompose_and_aggregate(results);
  return summary;
}

}  // namespace adbench::bench
