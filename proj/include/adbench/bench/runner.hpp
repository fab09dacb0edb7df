#pragma once

#include <string>
#include <vector>

#include "adbench/bench/config.hpp"
#include "adbench/score.hpp"

namespace adbench::bench {

struct CellOutcome {
  std::string planner;
  std::string scenario_name;
  std::string log_path;
  bool ok = false;
  std::string error;
  score::RouteResult result;
};

struct BenchSummary {
  std::vector<CellOutcome> cells;
  score::ScoreReport report;
  std::string report_text_path;
  std::string report_csv_path;
  int failures = 0;
};

// Runs every (planner, scenario file) cell, optionally filtered by a glob on
// the scenario name. Episode logs, both report forms, and a hashed manifest
// land under the output directory. Per-cell failures are recorded and the
// remaining cells still run.
BenchSummary run_benchmark(const BenchConfig& config, const std::string& filter_glob = "");

// Re-scores existing episode logs (written by run_benchmark) against the
// config's penalty table and scenario definitions.
BenchSummary rescore_logs(const BenchConfig& config, const std::string& log_dir);

// Simple glob: '*' and '?' wildcards.
bool glob_match(const std::string& pattern, const std::string& text);

}  // namespace adbench::bench
