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

// Episode sampling. Three regimes share one episode runner:
//
//   shared    every agent follows theta
//   focal     one agent follows rho, the rest follow theta
//   weighted  the focal agent is drawn per episode from kappa
//
// Each episode owns its random streams: the market draws from stream 0 and
// agent i samples its actions from stream 1 + i, all derived from
// (batch key, episode index). Batches are therefore reproducible under any
// thread count, and two batches with the same key see the same impressions.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ncb/market.hpp"
#include "ncb/policy.hpp"
#include "ncb/rng.hpp"

namespace ncb {

/// Which parameters each agent acts with. Holds non-owning pointers; the
/// referenced policies must outlive the profile.
class PolicyProfile {
 public:
  static PolicyProfile shared(const PolicyParams& theta, std::size_t n_agents) {
    return PolicyProfile(std::vector<const PolicyParams*>(n_agents, &theta));
  }

  static PolicyProfile focal(const PolicyParams& rho, const PolicyParams& theta, std::size_t focal,
                             std::size_t n_agents) {
    if (focal >= n_agents) throw std::out_of_range("focal agent index out of range");
    std::vector<const PolicyParams*> by_agent(n_agents, &theta);
    by_agent[focal] = &rho;
    return PolicyProfile(std::move(by_agent));
  }

  static PolicyProfile per_agent(std::span<const PolicyParams> policies) {
    std::vector<const PolicyParams*> by_agent;
    for (const auto& p : policies) by_agent.push_back(&p);
    return PolicyProfile(std::move(by_agent));
  }

  const PolicyParams& operator[](std::size_t agent) const { return *by_agent_[agent]; }
  std::size_t size() const { return by_agent_.size(); }

 private:
  explicit PolicyProfile(std::vector<const PolicyParams*> by_agent) : by_agent_(std::move(by_agent)) {}
  std::vector<const PolicyParams*> by_agent_;
};

struct Trajectory {
  std::vector<GlobalState> states;                // states[t] for t < T
  std::vector<std::vector<int>> actions;          // actions[t][i]; kNoAction when inactive
  std::vector<std::vector<double>> rewards;       // rewards[i][t]
  std::vector<std::vector<double>> costs;         // costs[i][t]
  std::vector<std::vector<double>> reward_to_go;  // reward_to_go[i][t], t <= T, last entry 0
  std::optional<std::size_t> focal_agent;

  std::size_t horizon() const { return actions.size(); }

  void compute_reward_to_go() {
    reward_to_go.assign(rewards.size(), {});
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      const std::size_t T = rewards[i].size();
      reward_to_go[i].assign(T + 1, 0.0);
      for (std::size_t t = T; t-- > 0;) reward_to_go[i][t] = rewards[i][t] + reward_to_go[i][t + 1];
    }
  }

  double total_reward(std::size_t agent) const {
    return std::accumulate(rewards[agent].begin(), rewards[agent].end(), 0.0);
  }
  double total_cost(std::size_t agent) const { return std::accumulate(costs[agent].begin(), costs[agent].end(), 0.0); }
};

enum class BatchKind { shared, focal, weighted, profile };

struct TrajectoryBatch {
  BatchKind kind = BatchKind::shared;
  std::size_t n_agents = 0;
  std::vector<Trajectory> episodes;
};

/// Plays one episode. `focal` is recorded on the trajectory only.
inline Trajectory run_episode(const PolicyProfile& profile, const MarketConfig& env, std::uint64_t episode_key,
                              std::optional<std::size_t> focal = std::nullopt) {
  const std::size_t n = env.n_agents, T = env.horizon;
  if (profile.size() != n) throw std::invalid_argument("run_episode: profile size differs from n_agents");
  Rng env_rng = Rng::stream(episode_key, 0);
  std::vector<Rng> act_rng;
  act_rng.reserve(n);
  for (std::size_t i = 0; i < n; ++i) act_rng.push_back(Rng::stream(episode_key, 1 + i));

  Trajectory traj;
  traj.focal_agent = focal;
  traj.rewards.assign(n, std::vector<double>(T, 0.0));
  traj.costs.assign(n, std::vector<double>(T, 0.0));
  traj.states.reserve(T);
  traj.actions.reserve(T);

  GlobalState state = sample_initial_state(env, env_rng);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> joint(n, kNoAction);
    for (std::size_t i = 0; i < n; ++i)
      if (state.locals[i].active) joint[i] = sample_action(profile[i], state.locals[i], act_rng[i]);
    StepResult res = step(state, joint, env, env_rng);
    for (std::size_t i = 0; i < n; ++i) {
      traj.rewards[i][t] = res.rewards[i];
      traj.costs[i][t] = res.costs[i];
    }
    traj.states.push_back(std::move(state));
    traj.actions.push_back(std::move(joint));
    state = std::move(res.next);
  }
  traj.compute_reward_to_go();
  return traj;
}

namespace detail {
template <class ProfileFor>
TrajectoryBatch run_batch(BatchKind kind, const MarketConfig& env, std::size_t episodes, Rng& rng,
                          ProfileFor&& profile_for) {
  if (episodes < 1) throw std::invalid_argument("rollout: episodes must be >= 1");
  env.validate();
  const std::uint64_t key = rng.next_u64();
  TrajectoryBatch batch;
  batch.kind = kind;
  batch.n_agents = env.n_agents;
  batch.episodes.resize(episodes);
  parallel_for(episodes, [&](std::size_t e) {
    const std::uint64_t ek = derive_key(key, e);
    batch.episodes[e] = profile_for(ek, [&](const PolicyProfile& profile, std::optional<std::size_t> focal) {
      return run_episode(profile, env, ek, focal);
    });
  });
  return batch;
}

inline void check_arch(const PolicyParams& p, const MarketConfig& env) {
  if (p.arch.n_agents != env.n_agents || p.arch.n_actions != env.n_actions())
    throw std::invalid_argument("policy architecture does not match the market");
}
}  // namespace detail

inline TrajectoryBatch rollout_shared(const PolicyParams& theta, const MarketConfig& env, std::size_t episodes,
                                      Rng& rng) {
  detail::check_arch(theta, env);
  const auto profile = PolicyProfile::shared(theta, env.n_agents);
  return detail::run_batch(BatchKind::shared, env, episodes, rng,
                           [&](std::uint64_t, auto&& play) { return play(profile, std::nullopt); });
}

inline TrajectoryBatch rollout_focal(const PolicyParams& rho, const PolicyParams& theta, std::size_t focal,
                                     const MarketConfig& env, std::size_t episodes, Rng& rng) {
  detail::check_arch(theta, env);
  detail::check_arch(rho, env);
  const auto profile = PolicyProfile::focal(rho, theta, focal, env.n_agents);
  return detail::run_batch(BatchKind::focal, env, episodes, rng,
                           [&](std::uint64_t, auto&& play) { return play(profile, focal); });
}

/// Throws unless kappa is a probability vector of length n.
inline void check_simplex(std::span<const double> kappa, std::size_t n) {
  if (kappa.size() != n) throw std::invalid_argument("kappa: length must equal n_agents");
  double total = 0.0;
  for (double k : kappa) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("kappa: entries must be finite and >= 0");
    total += k;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("kappa: entries must sum to 1");
}

/// Weighted regime with one focal policy per agent index (`focal_policies`
/// of size 1 means the same focal policy for everyone).
inline TrajectoryBatch rollout_weighted_multi(std::span<const PolicyParams> focal_policies, const PolicyParams& theta,
                                              std::span<const double> kappa, const MarketConfig& env,
                                              std::size_t episodes, Rng& rng) {
  detail::check_arch(theta, env);
  for (const auto& p : focal_policies) detail::check_arch(p, env);
  if (focal_policies.size() != 1 && focal_policies.size() != env.n_agents)
    throw std::invalid_argument("rollout_weighted: need one focal policy or one per agent");
  check_simplex(kappa, env.n_agents);
  return detail::run_batch(BatchKind::weighted, env, episodes, rng, [&](std::uint64_t ek, auto&& play) {
    Rng pick = Rng::stream(ek, 0xf0ca1ULL);
    const std::size_t i = pick.categorical(kappa);
    const PolicyParams& rho = focal_policies.size() == 1 ? focal_policies[0] : focal_policies[i];
    return play(PolicyProfile::focal(rho, theta, i, env.n_agents), i);
  });
}

inline TrajectoryBatch rollout_weighted(const PolicyParams& rho, const PolicyParams& theta,
                                        std::span<const double> kappa, const MarketConfig& env, std::size_t episodes,
                                        Rng& rng) {
  return rollout_weighted_multi(std::span<const PolicyParams>(&rho, 1), theta, kappa, env, episodes, rng);
}

/// Every agent follows its own parameters. `focal`, when given, is only
/// recorded on the episodes.
inline TrajectoryBatch rollout_profile(std::span<const PolicyParams> policies, const MarketConfig& env,
                                       std::size_t episodes, Rng& rng,
                                       std::optional<std::size_t> focal = std::nullopt) {
  if (policies.size() != env.n_agents) throw std::invalid_argument("rollout_profile: need one policy per agent");
  for (const auto& p : policies) detail::check_arch(p, env);
  if (focal && *focal >= env.n_agents) throw std::out_of_range("focal agent index out of range");
  const auto profile = PolicyProfile::per_agent(policies);
  return detail::run_batch(BatchKind::profile, env, episodes, rng,
                           [&](std::uint64_t, auto&& play) { return play(profile, focal); });
}

struct ReturnEstimates {
  std::vector<double> g_shared;  // mean total reward per agent over all episodes
  std::vector<double> g_focal;   // agent i's mean return over episodes where i was focal
  double g_weighted = 0.0;       // mean focal-agent return
  std::vector<double> se_shared;
  std::vector<double> se_focal;
  double se_weighted = 0.0;
  std::vector<double> mean_cost;  // mean total cost per agent
  std::size_t episode_count = 0;
  std::vector<std::size_t> focal_counts;
};

namespace detail {
inline double std_error(double sum, double sum_sq, std::size_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}
}  // namespace detail

inline ReturnEstimates estimate_returns(const TrajectoryBatch& batch) {
  const std::size_t n = batch.n_agents, E = batch.episodes.size();
  ReturnEstimates est;
  est.episode_count = E;
  est.g_shared.assign(n, 0.0);
  est.g_focal.assign(n, 0.0);
  est.se_shared.assign(n, 0.0);
  est.se_focal.assign(n, 0.0);
  est.mean_cost.assign(n, 0.0);
  est.focal_counts.assign(n, 0);
  std::vector<double> sq(n, 0.0), fsum(n, 0.0), fsq(n, 0.0);
  double wsum = 0.0, wsq = 0.0;
  std::size_t wcount = 0;
  for (const auto& traj : batch.episodes) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = traj.total_reward(i);
      est.g_shared[i] += g;
      sq[i] += g * g;
      est.mean_cost[i] += traj.total_cost(i);
    }
    if (traj.focal_agent) {
      const std::size_t f = *traj.focal_agent;
      const double g = traj.total_reward(f);
      fsum[f] += g;
      fsq[f] += g * g;
      ++est.focal_counts[f];
      wsum += g;
      wsq += g * g;
      ++wcount;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    est.se_shared[i] = detail::std_error(est.g_shared[i], sq[i], E);
    est.g_shared[i] /= static_cast<double>(E);
    est.mean_cost[i] /= static_cast<double>(E);
    if (est.focal_counts[i] > 0) {
      est.g_focal[i] = fsum[i] / static_cast<double>(est.focal_counts[i]);
      est.se_focal[i] = detail::std_error(fsum[i], fsq[i], est.focal_counts[i]);
    }
  }
  if (wcount > 0) {
    est.g_weighted = wsum / static_cast<double>(wcount);
    est.se_weighted = detail::std_error(wsum, wsq, wcount);
  }
  return est;
}

}  // namespace ncb
