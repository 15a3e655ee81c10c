// Copyright 2026 The NCB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment execution and persistence shared by the CLI and the tests.
//
// Layout of one output directory (never reused):
//
//   <output_dir>/<timestamp>-<tag>/
//     resolved.ini            the fully resolved configuration
//     runs.jsonl              one RunSummary per evaluated run
//     summary.csv, *.svg      written by render_report
//     <method>-e<eps>-s<seed>/
//       history.jsonl         one IterationRecord per outer iteration
//       *.ncbp                policy checkpoints
//       exploit.json          the ExploitReport

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncb/baselines.hpp"
#include "ncb/config.hpp"
#include "ncb/exploitability.hpp"
#include "ncb/report.hpp"

namespace ncb {

struct RunOptions {
  bool deterministic = false;  // single thread, wall_ms recorded as 0
  bool evaluate = true;        // train best responses and write exploit.json
};

struct CellResult {
  RunSummary summary;
  MethodResult result;
  std::optional<ExploitReport> report;
};

/// Directory name of one grid cell, e.g. "bpg-e0.08-s3".
inline std::string cell_name(Method m, double epsilon, std::uint64_t seed) {
  return to_string(m) + "-e" + config_detail::fmt(epsilon) + "-s" + std::to_string(seed);
}

/// Creates <base>/<UTC timestamp>-<tag>, adding -1, -2, ... if taken.
inline std::filesystem::path make_output_dir(const std::filesystem::path& base, const std::string& tag) {
  std::filesystem::create_directories(base);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const std::string stem = std::string(stamp) + "-" + tag;
  for (int k = 0;; ++k) {
    const auto dir = base / (k == 0 ? stem : stem + "-" + std::to_string(k));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

/// Seed used for the best-response evaluation of a run.
inline std::uint64_t evaluation_seed(std::uint64_t seed) { return derive_key(seed, 0xe7a1ULL); }

inline void save_profile_checkpoints(const MethodResult& r, const std::filesystem::path& dir) {
  if (r.shared) {
    save_train_checkpoints(*r.shared, dir);
    return;
  }
  for (std::size_t i = 0; i < r.profile.size(); ++i)
    save_checkpoint(r.profile[i], dir / ("policy_" + std::to_string(i) + ".ncbp"));
}

/// Trains one (method, epsilon, seed) cell, evaluates it and writes its files
/// into `run_dir` (created if missing).
inline CellResult run_cell(const ExperimentConfig& cfg, Method m, double epsilon, std::uint64_t seed,
                           const std::filesystem::path& run_dir, const RunOptions& opt = {},
                           const std::function<void(const IterationRecord&)>& progress = {}) {
  std::filesystem::create_directories(run_dir);
  TrainObserver obs;
  obs.record_wall_time = !opt.deterministic;
  obs.on_iteration = progress;
  CellResult out;
  out.result = run_method(m, cfg.market, cfg.train_for(epsilon, seed), obs);
  write_history_jsonl(run_dir / "history.jsonl", out.result.history);
  save_profile_checkpoints(out.result, run_dir);
  const bool converged = out.result.shared && out.result.shared->converged;
  if (opt.evaluate) {
    out.report = max_exploitability(out.result.profile, cfg.market, cfg.eval, epsilon, evaluation_seed(seed));
    write_text(run_dir / "exploit.json", out.report->to_json().dump(2) + "\n");
    out.summary = RunSummary::from(m, epsilon, seed, *out.report, out.result.history.size(), converged,
                                   run_dir.filename().string());
  } else {
    out.summary.method = m;
    out.summary.epsilon = epsilon;
    out.summary.seed = seed;
    out.summary.iterations = out.result.history.size();
    out.summary.converged = converged;
    out.summary.run_dir = run_dir.filename().string();
  }
  return out;
}

struct SweepCell {
  Method method;
  double epsilon;
  std::uint64_t seed;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg, const std::vector<Method>& methods) {
  std::vector<SweepCell> cells;
  for (Method m : methods)
    for (double e : cfg.epsilon_list)
      for (std::uint64_t s : cfg.seeds) cells.push_back({m, e, s});
  return cells;
}

/// Runs every (method, epsilon, seed) cell into `dir`, then writes
/// runs.jsonl in grid order and renders the report.
inline std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                                         const std::filesystem::path& dir, const RunOptions& opt = {},
                                         const std::function<void(const RunSummary&)>& on_cell = {}) {
  const auto cells = sweep_cells(cfg, methods);
  std::vector<RunSummary> summaries(cells.size());
  parallel_for(cells.size(), [&](std::size_t k) {
    const auto& c = cells[k];
    RunOptions cell_opt = opt;
    cell_opt.evaluate = true;
    summaries[k] = run_cell(cfg, c.method, c.epsilon, c.seed, dir / cell_name(c.method, c.epsilon, c.seed), cell_opt)
                       .summary;
    if (on_cell) on_cell(summaries[k]);
  });
  for (const auto& s : summaries) append_run_jsonl(s, dir / "runs.jsonl");
  render_report(dir);
  return summaries;
}

}  // namespace ncb
