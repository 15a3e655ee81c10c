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

// Best-response training and the equilibrium metrics built on it:
//
//   gap_i              = max(BR_i - G_i, 0) / SW,   SW = sum_i G_i
//   max_exploitability = max_i gap_i
//   compliance_rate    = fraction of runs with max_exploitability <= eps
//
// BR_i is learned, so it is a lower bound on the true best response and
// the reported exploitability depends on the training budget.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncb/gradients.hpp"
#include "ncb/policy.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

struct BestResponseConfig {
  std::size_t steps = 2000;
  std::size_t episodes = 64;
  double lr = 0.05;
  std::size_t eval_episodes = 1024;
  bool baseline = true;

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("eval.br_episodes: must be >= 1");
    if (eval_episodes < 1) throw std::invalid_argument("eval.br_eval_episodes: must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("eval.br_lr: must be > 0");
  }

  bool operator==(const BestResponseConfig&) const = default;
};

struct BestResponseResult {
  PolicyParams policy;
  double br_return = 0.0;
  double se = 0.0;
};

namespace detail {
inline std::vector<PolicyParams> shared_profile(const PolicyParams& theta, std::size_t n) {
  return std::vector<PolicyParams>(n, theta);
}
}  // namespace detail

/// `steps` of plain policy-gradient ascent (Adam) on agent i's return with
/// every other agent frozen at `profile`, starting from `init`.
inline PolicyParams improve_response(std::size_t agent, std::span<const PolicyParams> profile,
                                     const PolicyParams& init, const MarketConfig& env, std::size_t steps,
                                     std::size_t episodes, double lr, bool baseline, Rng& rng) {
  if (agent >= env.n_agents) throw std::out_of_range("best response: agent index out of range");
  if (profile.size() != env.n_agents) throw std::invalid_argument("best response: need one policy per agent");
  std::vector<PolicyParams> working(profile.begin(), profile.end());
  working[agent] = init;
  Adam opt;
  opt.lr = lr;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto batch = rollout_profile(working, env, episodes, rng, agent);
    const auto g = focal_policy_gradient(batch, working[agent], {baseline});
    opt.ascend(working[agent].values, g);
  }
  return working[agent];
}

/// Trains agent i against `profile` from `init`; the returned estimate uses a
/// fresh batch drawn from `eval_seed`.
inline BestResponseResult train_best_response(std::size_t agent, std::span<const PolicyParams> profile,
                                              const PolicyParams& init, const MarketConfig& env,
                                              const BestResponseConfig& cfg, Rng& rng, std::uint64_t eval_seed) {
  cfg.validate();
  std::vector<PolicyParams> working(profile.begin(), profile.end());
  working.at(agent) = improve_response(agent, profile, init, env, cfg.steps, cfg.episodes, cfg.lr, cfg.baseline, rng);
  Rng eval(eval_seed);
  const auto est = estimate_returns(rollout_profile(working, env, cfg.eval_episodes, eval, agent));
  return {working[agent], est.g_shared[agent], est.se_shared[agent]};
}

/// Best response of agent i when everyone else plays theta, warm-started
/// from theta.
inline BestResponseResult train_best_response(std::size_t agent, const PolicyParams& theta, const MarketConfig& env,
                                              const BestResponseConfig& cfg, Rng& rng, std::uint64_t eval_seed) {
  const auto profile = detail::shared_profile(theta, env.n_agents);
  return train_best_response(agent, profile, theta, env, cfg, rng, eval_seed);
}

struct ExploitReport {
  std::vector<double> best_response_return;
  std::vector<double> g_theta;
  std::vector<double> gaps;
  std::vector<double> se_best_response;
  std::vector<double> se_theta;
  double social_welfare = 0.0;
  double revenue = 0.0;
  double max_exploitability = 0.0;
  double epsilon_norm = 0.0;
  bool compliant = false;
  std::size_t br_steps = 0;
  std::size_t br_episodes = 0;

  nlohmann::json to_json() const {
    return {{"best_response_return", best_response_return},
            {"g_theta", g_theta},
            {"gaps", gaps},
            {"se_best_response", se_best_response},
            {"se_theta", se_theta},
            {"social_welfare", social_welfare},
            {"revenue", revenue},
            {"max_exploitability", max_exploitability},
            {"epsilon_norm", epsilon_norm},
            {"compliant", compliant},
            {"br_steps", br_steps},
            {"br_episodes", br_episodes}};
  }
};

/// The metric itself, from per-agent returns.
inline ExploitReport exploitability_from_returns(std::span<const double> br, std::span<const double> g,
                                                 double epsilon_norm) {
  if (br.size() != g.size() || g.empty()) throw std::invalid_argument("exploitability: length mismatch");
  ExploitReport r;
  r.best_response_return.assign(br.begin(), br.end());
  r.g_theta.assign(g.begin(), g.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(br[i]) || !std::isfinite(g[i])) throw std::invalid_argument("exploitability: non-finite return");
    r.social_welfare += g[i];
  }
  if (!(r.social_welfare > 0.0)) throw std::domain_error("exploitability: social welfare must be > 0");
  r.gaps.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    r.gaps[i] = std::max(br[i] - g[i], 0.0) / r.social_welfare;
    r.max_exploitability = std::max(r.max_exploitability, r.gaps[i]);
  }
  r.epsilon_norm = epsilon_norm;
  r.compliant = r.max_exploitability <= epsilon_norm;
  return r;
}

/// Trains a best response for every agent against `profile` and reports the
/// normalized gaps. Each agent's own policy is the warm start. G_i and BR_i
/// are evaluated on the same episode streams.
inline ExploitReport max_exploitability(std::span<const PolicyParams> profile, const MarketConfig& env,
                                        const BestResponseConfig& cfg, double epsilon_norm, std::uint64_t seed) {
  const std::size_t n = env.n_agents;
  if (profile.size() != n) throw std::invalid_argument("max_exploitability: need one policy per agent");
  const std::uint64_t eval_seed = derive_key(seed, 0xe7a1ULL);
  Rng eval(eval_seed);
  const auto base = estimate_returns(rollout_profile(profile, env, cfg.eval_episodes, eval));
  std::vector<BestResponseResult> brs(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, 1 + i);
    brs[i] = train_best_response(i, profile, profile[i], env, cfg, rng, eval_seed);
  });
  std::vector<double> br(n);
  for (std::size_t i = 0; i < n; ++i) br[i] = brs[i].br_return;
  ExploitReport r = exploitability_from_returns(br, base.g_shared, epsilon_norm);
  r.se_theta = base.se_shared;
  for (const auto& b : brs) r.se_best_response.push_back(b.se);
  for (double c : base.mean_cost) r.revenue += c;
  r.br_steps = cfg.steps;
  r.br_episodes = cfg.episodes;
  return r;
}

inline ExploitReport max_exploitability(const PolicyParams& theta, const MarketConfig& env,
                                        const BestResponseConfig& cfg, double epsilon_norm, std::uint64_t seed) {
  const auto profile = detail::shared_profile(theta, env.n_agents);
  return max_exploitability(profile, env, cfg, epsilon_norm, seed);
}

/// Fraction of runs whose max exploitability is within epsilon_norm.
inline double compliance_rate(std::span<const double> max_exploitabilities, double epsilon_norm) {
  if (max_exploitabilities.empty()) throw std::invalid_argument("compliance_rate: no runs");
  std::size_t ok = 0;
  for (double m : max_exploitabilities)
    if (m <= epsilon_norm) ++ok;
  return static_cast<double>(ok) / static_cast<double>(max_exploitabilities.size());
}

}  // namespace ncb
