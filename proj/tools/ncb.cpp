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

// ncb: experiment runner.
//
//   ncb train        one method, one epsilon, one seed
//   ncb sweep        epsilon x seed grid (optionally several methods)
//   ncb exploit      evaluate checkpoints, print an ExploitReport
//   ncb oracle-check exact-enumeration validation on a tiny market
//   ncb report       summary.csv and SVG plots from runs.jsonl
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 runtime error,
// 4 oracle check failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncb/ncb.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitOracle = 4;

struct Common {
  std::string config;
  bool deterministic = false;
};

void apply_common(const Common& c) {
  if (c.deterministic) ncb::set_max_threads(1);
}

std::string seed_tag(const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() == 1) return "s" + std::to_string(seeds.front());
  return "s" + std::to_string(seeds.front()) + "-" + std::to_string(seeds.back()) + "x" + std::to_string(seeds.size());
}

void print_iteration(const ncb::IterationRecord& r) {
  std::printf("iter %4zu  sw %.4f  lambda_bar %.4f  |d_theta| %.4f\n", r.iter, r.social_welfare, r.lambda_bar,
              r.grad_norm_theta);
  std::fflush(stdout);
}

void print_summary(const ncb::RunSummary& s) {
  std::printf("%-18s eps %-6s seed %-4llu  sw %.4f  max_exploitability %.4f  revenue %.4f  %s\n",
              ncb::to_string(s.method).c_str(), ncb::config_detail::fmt(s.epsilon).c_str(),
              static_cast<unsigned long long>(s.seed), s.social_welfare, s.max_exploitability, s.revenue,
              s.compliant ? "compliant" : "violates");
  std::fflush(stdout);
}

int cmd_train(const Common& common, std::optional<std::string> method, std::optional<double> epsilon,
              std::optional<std::uint64_t> seed, std::optional<std::string> output_dir, bool no_eval, bool quiet) {
  auto cfg = ncb::load_config(common.config);
  if (method) cfg.method = ncb::parse_method(*method);
  if (epsilon) cfg.epsilon_list = {*epsilon};
  if (seed) cfg.seeds = {*seed};
  if (output_dir) cfg.output_dir = *output_dir;
  cfg.epsilon_list.resize(1);
  cfg.seeds.resize(1);
  cfg.validate();
  const double eps = cfg.epsilon_list.front();
  const std::uint64_t s = cfg.seeds.front();
  const auto dir = ncb::make_output_dir(cfg.output_dir, ncb::cell_name(cfg.method, eps, s));
  ncb::write_config(cfg, dir / "resolved.ini");
  ncb::RunOptions opt{common.deterministic, !no_eval};
  const auto cell = ncb::run_cell(cfg, cfg.method, eps, s, dir, opt,
                                  quiet ? std::function<void(const ncb::IterationRecord&)>{} : print_iteration);
  if (cell.report) {
    auto summary = cell.summary;
    summary.run_dir = ".";
    ncb::append_run_jsonl(summary, dir / "runs.jsonl");
    print_summary(summary);
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return kExitOk;
}

int cmd_sweep(const Common& common, const std::vector<std::string>& methods, std::optional<std::string> output_dir) {
  auto cfg = ncb::load_config(common.config);
  if (output_dir) cfg.output_dir = *output_dir;
  cfg.validate();
  std::vector<ncb::Method> ms;
  for (const auto& m : methods) ms.push_back(ncb::parse_method(m));
  if (ms.empty()) ms.push_back(cfg.method);
  const auto dir = ncb::make_output_dir(cfg.output_dir, "sweep-" + seed_tag(cfg.seeds));
  ncb::write_config(cfg, dir / "resolved.ini");
  ncb::run_sweep(cfg, ms, dir, {common.deterministic, true}, print_summary);
  std::printf("wrote %s\n", dir.string().c_str());
  return kExitOk;
}

int cmd_exploit(const Common& common, const std::vector<std::string>& checkpoints, std::optional<double> epsilon,
                std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  const auto cfg = ncb::load_config(common.config);
  const std::size_t n = cfg.market.n_agents;
  if (checkpoints.size() != 1 && checkpoints.size() != n)
    throw ncb::ConfigError("exploit: pass one shared checkpoint or one per agent (" + std::to_string(n) + ")");
  std::vector<ncb::PolicyParams> profile;
  for (const auto& path : checkpoints) profile.push_back(ncb::load_checkpoint(path));
  if (profile.size() == 1) profile.assign(n, profile.front());
  for (const auto& p : profile) {
    if (p.arch != ncb::arch_for(cfg.market, p.arch.embed_dim))
      throw std::runtime_error("checkpoint architecture does not match the configured market");
  }
  const double eps = epsilon.value_or(cfg.epsilon_list.front());
  const std::uint64_t s = seed.value_or(cfg.seeds.front());
  const auto report = ncb::max_exploitability(profile, cfg.market, cfg.eval, eps, ncb::evaluation_seed(s));
  const std::string text = report.to_json().dump(2) + "\n";
  if (out) ncb::write_text(*out, text);
  std::cout << text;
  return kExitOk;
}

int cmd_oracle_check(const Common& common, std::size_t episodes, std::uint64_t seed, std::optional<std::string> out) {
  const auto cfg = ncb::load_config(common.config);
  ncb::OracleSuiteOptions opt;
  opt.mc_episodes = episodes;
  opt.seed = seed;
  opt.br = cfg.eval;
  const auto results = ncb::run_oracle_suite(cfg.market, opt);
  bool all = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    std::printf("%s  %-26s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
    j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  if (out) ncb::write_text(*out, j.dump(2) + "\n");
  std::printf("%s: %zu checks\n", all ? "all checks passed" : "oracle check FAILED", results.size());
  return all ? kExitOk : kExitOracle;
}

int cmd_report(const std::string& dir) {
  for (const auto& p : ncb::render_report(dir)) std::printf("wrote %s\n", p.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash-equilibrium constrained bidding: simulator, BPG training and evaluation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Configuration file")->required();
    sub->add_flag("--deterministic", common.deterministic, "Single-threaded, bit-reproducible, wall_ms = 0");
  };

  std::optional<std::string> method, output_dir, out;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;
  bool no_eval = false, quiet = false;
  std::vector<std::string> methods, checkpoints;
  std::size_t episodes = 100000;
  std::uint64_t oracle_seed = 0;
  std::string report_dir;

  auto* train = app.add_subcommand("train", "Train one method at one epsilon and seed");
  add_common(train);
  train->add_option("--method", method, "bpg, bpg_zero, fully_cooperative or independent");
  train->add_option("--epsilon", epsilon, "Normalized epsilon (default: first of experiment.epsilons)");
  train->add_option("--seed", seed, "Seed (default: first of experiment.seeds)");
  train->add_option("--output-dir", output_dir, "Overrides experiment.output_dir");
  train->add_flag("--no-eval", no_eval, "Skip the best-response evaluation");
  train->add_flag("-q,--quiet", quiet, "Do not print per-iteration progress");

  auto* sweep = app.add_subcommand("sweep", "Run the epsilon x seed grid");
  add_common(sweep);
  sweep->add_option("--method", methods, "Methods to run (repeatable; default: experiment.method)");
  sweep->add_option("--output-dir", output_dir, "Overrides experiment.output_dir");

  auto* exploit = app.add_subcommand("exploit", "Evaluate checkpoints and print an ExploitReport");
  add_common(exploit);
  exploit->add_option("--checkpoint", checkpoints, "Shared checkpoint, or one per agent in order")->required();
  exploit->add_option("--epsilon", epsilon, "Normalized epsilon for the compliance flag");
  exploit->add_option("--seed", seed, "Evaluation seed");
  exploit->add_option("-o,--out", out, "Also write the report to this file");

  auto* oracle = app.add_subcommand("oracle-check", "Validate estimators against exact enumeration");
  add_common(oracle);
  oracle->add_option("--episodes", episodes, "Monte-Carlo episodes per estimate")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "Seed for the random test policies");
  oracle->add_option("-o,--out", out, "Also write the results as JSON");

  auto* report = app.add_subcommand("report", "Render summary.csv and plots for an output directory");
  report->add_option("-d,--dir", report_dir, "Directory holding runs.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    apply_common(common);
    if (*train) return cmd_train(common, method, epsilon, seed, output_dir, no_eval, quiet);
    if (*sweep) return cmd_sweep(common, methods, output_dir);
    if (*exploit) return cmd_exploit(common, checkpoints, epsilon, seed, out);
    if (*oracle) return cmd_oracle_check(common, episodes, oracle_seed, out);
    if (*report) return cmd_report(report_dir);
  } catch (const ncb::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
