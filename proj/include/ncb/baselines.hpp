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

// Comparison trainers. All of them emit IterationRecord histories.
//
//   bpg_zero           per-agent deviations nu_i trained by a short warm-started
//                      best-response run each iteration; the implicit term is
//                      dropped, so delta_theta = L_s(theta, nu) - L1(theta).
//   fully_cooperative  ascent on social welfare alone (L1 with lambda = 0).
//   independent        round-robin best responses, one policy per agent.

#pragma once

#include <chrono>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncb/bpg.hpp"
#include "ncb/exploitability.hpp"
#include "ncb/gradients.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

enum class Method { bpg, bpg_zero, fully_cooperative, independent };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::bpg: return "bpg";
    case Method::bpg_zero: return "bpg_zero";
    case Method::fully_cooperative: return "fully_cooperative";
    case Method::independent: return "independent";
  }
  return "unknown";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::bpg, Method::bpg_zero, Method::fully_cooperative, Method::independent})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method '" + s + "' (expected bpg, bpg_zero, fully_cooperative or independent)");
}

/// Descent direction of cooperative training: -L1 with lambda = 0.
inline std::vector<double> cooperative_direction(std::span<const double> l1) {
  std::vector<double> d(l1.begin(), l1.end());
  for (auto& x : d) x = -x;
  return d;
}

/// Descent direction of the ablation: L_s - L1.
inline std::vector<double> bpg_zero_direction(std::span<const double> l1, std::span<const double> ls) {
  if (l1.size() != ls.size()) throw std::invalid_argument("bpg_zero_direction: length mismatch");
  std::vector<double> d(l1.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = ls[k] - l1[k];
  return d;
}

inline TrainResult train_bpg_zero(const MarketConfig& env, const TrainConfig& cfg, const TrainObserver& obs = {}) {
  env.validate();
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult res;
  res.theta = initial_policy(env, cfg, rng);
  res.nu_bar = res.theta;
  res.x_star = res.theta;
  res.dual = DualState::initial(env.n_agents, cfg.epsilon);
  std::vector<PolicyParams> nu(env.n_agents, res.theta);
  const std::size_t n = env.n_agents;

  for (std::size_t it = 0; it < cfg.max_outer_iters && !res.converged; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto profile = detail::shared_profile(res.theta, n);
    const std::uint64_t br_key = rng.next_u64();
    parallel_for(n, [&](std::size_t i) {
      Rng r = Rng::stream(br_key, i);
      nu[i] = improve_response(i, profile, nu[i], env, cfg.bpg_zero_br_steps, cfg.unified_episodes, cfg.unified_lr,
                               cfg.baseline, r);
    });

    const auto shared = rollout_shared(res.theta, env, cfg.episodes_per_estimate, rng);
    const auto g_theta = estimate_returns(shared).g_shared;
    const double sw = std::accumulate(g_theta.begin(), g_theta.end(), 0.0);
    std::vector<double> g_nu(n);
    for (std::size_t i = 0; i < n; ++i)
      g_nu[i] = estimate_returns(rollout_focal(nu[i], res.theta, i, env, cfg.episodes_per_estimate, rng)).g_focal[i];
    res.dual = detail::dual_step(g_nu, g_theta, sw, cfg);

    const EstimatorOptions eo{cfg.baseline};
    const auto l1 = grad_L1(shared, res.dual.lambdas, res.theta, eo);
    std::vector<double> ls(l1.size(), 0.0);
    if (res.dual.lambda_bar > 0.0) {
      const auto wb = rollout_weighted_multi(nu, res.theta, res.dual.kappas, env, cfg.episodes_per_estimate, rng);
      ls = grad_Ls(wb, res.dual.lambda_bar, res.theta, eo);
    }
    const auto delta = bpg_zero_direction(l1, ls);
    GradientBundle b;
    b.delta_theta = delta;
    b.delta_nu.assign(res.nu_bar.values.size(), 0.0);
    std::tie(res.theta, res.nu_bar) = primal_update(res.theta, res.nu_bar, b, cfg.alpha1, 0.0);

    IterationRecord rec;
    rec.iter = it;
    rec.social_welfare = sw;
    rec.g_theta = g_theta;
    rec.g_xstar = g_nu;
    rec.lambdas = res.dual.lambdas;
    rec.lambda_bar = res.dual.lambda_bar;
    rec.kappas = res.dual.kappas;
    rec.grad_norm_theta = l2_norm(delta);
    rec.wall_ms = detail::elapsed_ms(t0, obs.record_wall_time);
    detail::finish_iteration(res, std::move(rec), cfg, obs);
  }
  res.nu_bar = res.theta;
  return res;
}

inline TrainResult train_fully_cooperative(const MarketConfig& env, const TrainConfig& cfg,
                                           const TrainObserver& obs = {}) {
  env.validate();
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult res;
  res.theta = initial_policy(env, cfg, rng);
  res.dual = DualState::initial(env.n_agents, cfg.epsilon);
  const std::vector<double> zero(env.n_agents, 0.0);
  for (std::size_t it = 0; it < cfg.max_outer_iters && !res.converged; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto shared = rollout_shared(res.theta, env, cfg.episodes_per_estimate, rng);
    const auto g_theta = estimate_returns(shared).g_shared;
    const auto d = cooperative_direction(grad_L1(shared, zero, res.theta, {cfg.baseline}));
    for (std::size_t k = 0; k < d.size(); ++k) res.theta.values[k] -= cfg.alpha1 * d[k];

    IterationRecord rec;
    rec.iter = it;
    rec.g_theta = g_theta;
    rec.social_welfare = std::accumulate(g_theta.begin(), g_theta.end(), 0.0);
    rec.lambdas = zero;
    rec.kappas = res.dual.kappas;
    rec.grad_norm_theta = l2_norm(d);
    rec.wall_ms = detail::elapsed_ms(t0, obs.record_wall_time);
    detail::finish_iteration(res, std::move(rec), cfg, obs);
  }
  res.nu_bar = res.theta;
  res.x_star = res.theta;
  return res;
}

struct IndependentResult {
  std::vector<PolicyParams> policies;
  std::vector<IterationRecord> history;
};

/// Each round trains every agent in turn (bpg_zero_br_steps steps) against
/// the others' current policies. One record per round.
inline IndependentResult train_independent(const MarketConfig& env, const TrainConfig& cfg,
                                           const TrainObserver& obs = {}) {
  env.validate();
  cfg.validate();
  Rng rng(cfg.seed);
  IndependentResult res;
  res.policies.assign(env.n_agents, initial_policy(env, cfg, rng));
  const std::vector<double> zero(env.n_agents, 0.0);
  for (std::size_t round = 0; round < cfg.independent_rounds; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < env.n_agents; ++i)
      res.policies[i] = improve_response(i, res.policies, res.policies[i], env, cfg.bpg_zero_br_steps,
                                         cfg.unified_episodes, cfg.unified_lr, cfg.baseline, rng);
    const auto est = estimate_returns(rollout_profile(res.policies, env, cfg.episodes_per_estimate, rng));
    IterationRecord rec;
    rec.iter = round;
    rec.g_theta = est.g_shared;
    rec.social_welfare = std::accumulate(est.g_shared.begin(), est.g_shared.end(), 0.0);
    rec.lambdas = zero;
    rec.kappas.assign(env.n_agents, 1.0 / static_cast<double>(env.n_agents));
    rec.wall_ms = detail::elapsed_ms(t0, obs.record_wall_time);
    if (obs.on_iteration) obs.on_iteration(rec);
    res.history.push_back(std::move(rec));
  }
  return res;
}

/// Result of any method: the joint policy (one entry per agent) plus history.
struct MethodResult {
  Method method = Method::bpg;
  std::vector<PolicyParams> profile;
  std::vector<IterationRecord> history;
  std::optional<TrainResult> shared;  // set for the shared-policy methods
};

inline MethodResult run_method(Method m, const MarketConfig& env, const TrainConfig& cfg,
                               const TrainObserver& obs = {}) {
  MethodResult out;
  out.method = m;
  if (m == Method::independent) {
    auto r = train_independent(env, cfg, obs);
    out.profile = std::move(r.policies);
    out.history = std::move(r.history);
    return out;
  }
  TrainResult r = m == Method::bpg        ? bpg_train(env, cfg, obs)
                  : m == Method::bpg_zero ? train_bpg_zero(env, cfg, obs)
                                          : train_fully_cooperative(env, cfg, obs);
  out.profile.assign(env.n_agents, r.theta);
  out.history = r.history;
  out.shared = std::move(r);
  return out;
}

}  // namespace ncb
