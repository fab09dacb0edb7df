// Command-line benchmark harness: run planner x scenario matrices, re-score
// logs, replay episodes to SVG, and validate maps.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "adbench/bench/config.hpp"
#include "adbench/bench/plot.hpp"
#include "adbench/bench/runner.hpp"
#include "adbench/error.hpp"
#include "adbench/mapkit/opendrive.hpp"
#include "adbench/mapkit/vector_map.hpp"
#include "adbench/sim/episode.hpp"

namespace fs = std::filesystem;
using namespace adbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCellFailures = 1;
constexpr int kExitConfigError = 2;

struct RunOptions {
  std::string config_path;
  std::string planner_override;
  std::string out_override;
  std::string filter;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

bench::BenchConfig load_with_overrides(const RunOptions& opts) {
  bench::BenchConfig config = bench::load_config(opts.config_path);
  if (!opts.planner_override.empty()) config.planners = {opts.planner_override};
  if (!opts.out_override.empty()) config.output_dir = opts.out_override;
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.jobs > 0) config.jobs = opts.jobs;
  return config;
}

int do_run(const RunOptions& opts) {
  const bench::BenchConfig config = load_with_overrides(opts);
  const bench::BenchSummary summary = bench::run_benchmark(config, opts.filter);
  for (const auto& cell : summary.cells) {
    if (cell.ok) {
      std::printf("%-6s %-28s DS %6.1f  RC %6.1f  IP %6.1f  -> %s\n", cell.planner.c_str(),
                  cell.scenario_name.c_str(), cell.result.ds, cell.result.rc, cell.result.ip,
                  cell.log_path.c_str());
    } else {
      std::printf("%-6s %-28s FAILED: %s\n", cell.planner.c_str(), cell.scenario_name.c_str(),
                  cell.error.c_str());
    }
  }
  std::printf("\n%s\n", score::render_report_text(summary.report).c_str());
  std::printf("report: %s\n", summary.report_text_path.c_str());
  return summary.failures == 0 ? kExitOk : kExitCellFailures;
}

int do_score(const RunOptions& opts, const std::string& log_dir, const std::string& out_dir) {
  const bench::BenchConfig config = load_with_overrides(opts);
  const bench::BenchSummary summary = bench::rescore_logs(config, log_dir);
  const std::string text = score::render_report_text(summary.report);
  std::printf("%s", text.c_str());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream txt(fs::path(out_dir) / "report.txt", std::ios::binary);
    txt << text;
    std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::binary);
    csv << score::render_report_csv(summary.report);
  }
  return summary.failures == 0 ? kExitOk : kExitCellFailures;
}

int do_replay(const std::string& log_path, std::string out_path, const std::string& map_root) {
  const sim::EpisodeLog log = sim::load_episode_log(log_path);
  std::unique_ptr<mapkit::VectorMap> map;
  if (!log.meta.map_path.empty()) {
    fs::path map_path(log.meta.map_path);
    if (!map_path.is_absolute() && !map_root.empty()) {
      map_path = fs::path(map_root) / map_path;
    }
    if (fs::exists(map_path)) {
      map = std::make_unique<mapkit::VectorMap>(
          mapkit::build_vector_map(mapkit::load_opendrive_file(map_path.string())));
    } else {
      std::fprintf(stderr, "note: map %s not found, plotting traces only\n",
                   map_path.string().c_str());
    }
  }
  if (out_path.empty()) {
    out_path = fs::path(log_path).replace_extension(".svg").string();
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + out_path);
  out << bench::render_episode_svg(log, map.get());
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

int do_validate(const std::string& map_path, double spacing, const std::string& dump_path) {
  const mapkit::RoadNetwork network = mapkit::load_opendrive_file(map_path);
  const mapkit::VectorMap map = mapkit::build_vector_map(network, spacing);

  int checks = 0, passed = 0;
  const auto check = [&](const char* name, bool ok, const std::string& detail = "") {
    ++checks;
    passed += ok;
    std::printf("  [%s] %s%s%s\n", ok ? "ok" : "FAIL", name, detail.empty() ? "" : ": ",
                detail.c_str());
  };

  std::printf("%s: %zu roads, %zu lanes, %zu stop lines, %zu lights, %zu crosswalks\n",
              map_path.c_str(), network.roads.size(), map.lanes.size(), map.stop_lines.size(),
              map.lights.size(), map.crosswalks.size());

  for (const auto& road : network.roads) {
    double sampled = 0.0;
    bool arcs_on_circle = true;
    Vec2 prev;
    bool have_prev = false;
    for (const auto& g : road.geometry) {
      const int n = static_cast<int>(std::ceil(g.length / spacing)) + 1;
      for (int i = 0; i < n; ++i) {
        const double ds = std::min(i * g.length / (n - 1), g.length);
        const Vec2 p = g.point_at(ds);
        if (have_prev) sampled += (p - prev).norm();
        prev = p;
        have_prev = true;
        if (g.kind == mapkit::GeometryKind::Arc) {
          const Vec2 center{g.origin.x() - std::sin(g.heading) / g.curvature,
                            g.origin.y() + std::cos(g.heading) / g.curvature};
          if (std::abs((p - center).norm() - 1.0 / std::abs(g.curvature)) > 1e-6) {
            arcs_on_circle = false;
          }
        }
      }
    }
    const double rel = std::abs(sampled - road.length) / road.length;
    check(("road " + std::to_string(road.id) + " length round-trip").c_str(), rel < 1e-3,
          "declared " + std::to_string(road.length) + ", sampled " + std::to_string(sampled));
    check(("road " + std::to_string(road.id) + " arc points on circle").c_str(), arcs_on_circle);
  }

  bool continuity = true;
  for (const auto& lane : map.lanes) {
    for (int succ : lane.successors) {
      const auto& next = map.lanes[static_cast<std::size_t>(succ)];
      if ((next.points.front().position - lane.points.back().position).norm() > 0.5) {
        continuity = false;
      }
    }
  }
  check("lane successor continuity within 0.5 m", continuity);

  bool spacing_ok = true;
  for (const auto& lane : map.lanes) {
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      const double gap = (lane.points[i].position - lane.points[i - 1].position).norm();
      if (gap < 0.1 - 1e-9 || gap > 2.0 + 1e-9) spacing_ok = false;
    }
  }
  check("centerline sample spacing within [0.1, 2.0] m", spacing_ok);

  if (!dump_path.empty()) {
    std::ofstream out(dump_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + dump_path);
    mapkit::write_vector_map(out, map);
    std::printf("wrote %s\n", dump_path.c_str());
  }

  std::printf("%d/%d checks passed\n", passed, checks);
  return passed == checks ? kExitOk : kExitCellFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale closed-loop driving benchmark"};
  app.require_subcommand(0, 1);

  bool print_default_config = false;
  app.add_flag("--print-default-config", print_default_config,
               "Print the fully-resolved default config and exit");

  RunOptions opts;

  CLI::App* run = app.add_subcommand("run", "Run the planner x scenario matrix");
  run->add_option("--config", opts.config_path, "Benchmark config file")->required();
  run->add_option("--planner", opts.planner_override, "Run a single planner (rule|mpc)");
  run->add_option("--seed", opts.seed, "Global seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  run->add_option("--jobs", opts.jobs, "Parallel cells");
  run->add_option("--out", opts.out_override, "Output directory");
  run->add_option("--filter", opts.filter, "Scenario name glob");

  std::string log_dir, score_out;
  CLI::App* score_cmd = app.add_subcommand("score", "Re-score existing episode logs");
  score_cmd->add_option("--config", opts.config_path, "Benchmark config file")->required();
  score_cmd->add_option("--logs", log_dir, "Directory of .jsonl episode logs")->required();
  score_cmd->add_option("--out", score_out, "Directory for the regenerated report");

  std::string replay_log, replay_out, map_root;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Render an episode log to SVG");
  replay_cmd->add_option("--log", replay_log, "Episode log (.jsonl)")->required();
  replay_cmd->add_option("--out", replay_out, "Output SVG path");
  replay_cmd->add_option("--map-root", map_root, "Base directory for relative map paths");

  std::string map_path, dump_path;
  double spacing = 0.5;
  CLI::App* validate_cmd = app.add_subcommand("validate-map", "Check an OpenDRIVE map");
  validate_cmd->add_option("map", map_path, "Map file (.xodr)")->required();
  validate_cmd->add_option("--spacing", spacing, "Sampling spacing in meters");
  validate_cmd->add_option("--dump", dump_path, "Write the sampled vector map to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_default_config) {
      std::fputs(bench::default_config_text().c_str(), stdout);
      return kExitOk;
    }
    if (run->parsed()) return do_run(opts);
    if (score_cmd->parsed()) return do_score(opts, log_dir, score_out);
    if (replay_cmd->parsed()) return do_replay(replay_log, replay_out, map_root);
    if (validate_cmd->parsed()) return do_validate(map_path, spacing, dump_path);
    std::fputs(app.help().c_str(), stdout);
    return kExitOk;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Io ? kExitConfigError
                                                                      : kExitCellFailures;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCellFailures;
  }
}
