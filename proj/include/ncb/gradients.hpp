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

// Score-function estimators for the four terms of the primal gradient and
// their assembly into the (theta, nu_bar) descent directions.
//
// Every estimator has the form
//
//   mean over episodes of  sum_t sum_{j in S} grad ln pi_p(a_jt | s_jt, j) * target_t
//
// and differs only in which agents' scores are summed (S), which parameters
// they are taken with respect to (p), and the return target:
//
//   L1       S = all agents,      p = theta,  target = sum_i (1 + lambda_i) rtg_i
//   L_s      S = non-focal,       p = theta,  target = rtg_focal  (times lambda_bar)
//   L_g'     S = {focal},         p = nu_bar, target = rtg_focal  (times lambda_bar)
//   L_w*     S = non-focal,       p = theta,  target = rtg_focal  (focal plays x*)
//
// With the optional baseline, target_t is reduced by the leave-one-out batch
// mean of the same target at step t among episodes with the same focal agent.
// Leaving the episode itself out keeps the baseline independent of its own
// actions, so the estimator stays unbiased.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncb/policy.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

enum class ScoreAgents { all, focal, non_focal };

/// Return target per step: either the weighted sum of all agents' reward to
/// go (`agent_weights` non-empty), or the focal agent's reward to go.
struct TargetSpec {
  std::vector<double> agent_weights;

  std::vector<double> evaluate(const Trajectory& traj) const {
    const std::size_t T = traj.horizon();
    std::vector<double> target(T, 0.0);
    if (!agent_weights.empty()) {
      for (std::size_t i = 0; i < agent_weights.size(); ++i)
        for (std::size_t t = 0; t < T; ++t) target[t] += agent_weights[i] * traj.reward_to_go[i][t];
    } else {
      if (!traj.focal_agent) throw std::invalid_argument("estimator needs focal annotations on every episode");
      for (std::size_t t = 0; t < T; ++t) target[t] = traj.reward_to_go[*traj.focal_agent][t];
    }
    return target;
  }
};

/// Adds sum_t sum_{j in S} grad ln pi_p(a_jt | s_jt, j) * target[t] to `out`.
inline void accumulate_episode_score(const Trajectory& traj, const PolicyParams& p, ScoreAgents who,
                                     std::span<const double> target, std::span<double> out) {
  const std::size_t T = traj.horizon();
  if ((who != ScoreAgents::all) && !traj.focal_agent)
    throw std::invalid_argument("estimator needs focal annotations on every episode");
  for (std::size_t t = 0; t < T; ++t) {
    if (target[t] == 0.0) continue;
    const auto& joint = traj.actions[t];
    for (std::size_t j = 0; j < joint.size(); ++j) {
      if (joint[j] == kNoAction) continue;
      if (who == ScoreAgents::focal && j != *traj.focal_agent) continue;
      if (who == ScoreAgents::non_focal && j == *traj.focal_agent) continue;
      accumulate_log_prob_grad(p, traj.states[t].locals[j], joint[j], target[t], out);
    }
  }
}

/// Batch mean of the per-episode score sum, optionally with the leave-one-out
/// baseline described above.
inline std::vector<double> policy_gradient_estimate(const TrajectoryBatch& batch, const PolicyParams& p,
                                                    ScoreAgents who, const TargetSpec& spec, bool baseline) {
  const std::size_t E = batch.episodes.size(), P = p.values.size();
  std::vector<double> grad(P, 0.0);
  if (E == 0) return grad;

  std::vector<std::vector<double>> targets(E);
  for (std::size_t e = 0; e < E; ++e) targets[e] = spec.evaluate(batch.episodes[e]);

  if (baseline) {
    // Group by focal agent; shared batches form a single group.
    const std::size_t groups = batch.n_agents + 1;
    auto group_of = [&](const Trajectory& tr) { return tr.focal_agent ? *tr.focal_agent : batch.n_agents; };
    const std::size_t T = E > 0 ? batch.episodes.front().horizon() : 0;
    std::vector<std::vector<double>> sums(groups, std::vector<double>(T, 0.0));
    std::vector<std::size_t> counts(groups, 0);
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t g = group_of(batch.episodes[e]);
      ++counts[g];
      for (std::size_t t = 0; t < T; ++t) sums[g][t] += targets[e][t];
    }
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t g = group_of(batch.episodes[e]);
      if (counts[g] < 2) continue;
      const double others = static_cast<double>(counts[g] - 1);
      for (std::size_t t = 0; t < T; ++t) {
        const double b = (sums[g][t] - targets[e][t]) / others;
        targets[e][t] -= b;
      }
    }
  }

  std::vector<std::vector<double>> per_episode(E);
  parallel_for(E, [&](std::size_t e) {
    per_episode[e].assign(P, 0.0);
    accumulate_episode_score(batch.episodes[e], p, who, targets[e], per_episode[e]);
  });
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t k = 0; k < P; ++k) grad[k] += per_episode[e][k];
  for (auto& g : grad) g /= static_cast<double>(E);
  return grad;
}

struct EstimatorOptions {
  bool baseline = true;
};

/// Cooperative gradient L1 = sum_i (1 + lambda_i) grad_theta G_i(theta), from
/// a shared batch.
inline std::vector<double> grad_L1(const TrajectoryBatch& batch, std::span<const double> lambda,
                                   const PolicyParams& theta, EstimatorOptions opts = {}) {
  if (lambda.size() != batch.n_agents) throw std::invalid_argument("grad_L1: lambda length must equal n_agents");
  TargetSpec spec;
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("grad_L1: lambda entries must be >= 0");
    spec.agent_weights.push_back(1.0 + l);
  }
  return policy_gradient_estimate(batch, theta, ScoreAgents::all, spec, opts.baseline);
}

namespace detail {
inline void require_focal(const TrajectoryBatch& batch, const char* who) {
  for (const auto& tr : batch.episodes)
    if (!tr.focal_agent) throw std::invalid_argument(std::string(who) + ": batch lacks focal annotations");
}
inline std::vector<double> scaled(std::vector<double> v, double s) {
  for (auto& x : v) x *= s;
  return v;
}
}  // namespace detail

/// L_s = lambda_bar * grad_theta G_w(nu_bar; theta), from a weighted batch
/// sampled with focal policy nu_bar.
inline std::vector<double> grad_Ls(const TrajectoryBatch& batch, double lambda_bar, const PolicyParams& theta,
                                   EstimatorOptions opts = {}) {
  detail::require_focal(batch, "grad_Ls");
  if (lambda_bar == 0.0) return std::vector<double>(theta.values.size(), 0.0);
  return detail::scaled(policy_gradient_estimate(batch, theta, ScoreAgents::non_focal, {}, opts.baseline), lambda_bar);
}

/// L_g' = lambda_bar * grad_nu G_w(nu_bar; theta), from the same weighted batch.
inline std::vector<double> grad_Lg_prime(const TrajectoryBatch& batch, double lambda_bar, const PolicyParams& nu,
                                         EstimatorOptions opts = {}) {
  detail::require_focal(batch, "grad_Lg_prime");
  if (lambda_bar == 0.0) return std::vector<double>(nu.values.size(), 0.0);
  return detail::scaled(policy_gradient_estimate(batch, nu, ScoreAgents::focal, {}, opts.baseline), lambda_bar);
}

/// L_w* = grad_theta G_w(x; theta) at x = x*, from a weighted batch sampled
/// with focal policy x*.
inline std::vector<double> grad_Lw_star(const TrajectoryBatch& batch, const PolicyParams& theta,
                                        EstimatorOptions opts = {}) {
  detail::require_focal(batch, "grad_Lw_star");
  return policy_gradient_estimate(batch, theta, ScoreAgents::non_focal, {}, opts.baseline);
}

/// Ascent direction for the focal policy's own return (the unified solution
/// and best-response updates).
inline std::vector<double> focal_policy_gradient(const TrajectoryBatch& batch, const PolicyParams& focal_policy,
                                                 EstimatorOptions opts = {}) {
  detail::require_focal(batch, "focal_policy_gradient");
  return policy_gradient_estimate(batch, focal_policy, ScoreAgents::focal, {}, opts.baseline);
}

struct GradientBundle {
  std::vector<double> l1;
  std::vector<double> ls;
  std::vector<double> lg_prime;
  std::vector<double> lw_star;
  std::vector<double> delta_theta;
  std::vector<double> delta_nu;
  double xi = 1.0;
  double lambda_bar = 0.0;
};

struct Directions {
  std::vector<double> delta_theta;
  std::vector<double> delta_nu;
};

/// delta_theta = xi L_w* + (1 - xi / lambda_bar) L_s - L1
/// delta_nu    = (1 - xi / lambda_bar) L_g'
/// and (-L1, 0) when lambda_bar == 0. Clamping the competitive factor at
/// zero is an experimental option, off by default.
inline Directions assemble(std::span<const double> l1, std::span<const double> ls, std::span<const double> lg_prime,
                           std::span<const double> lw_star, double xi, double lambda_bar,
                           bool clamp_competitive_factor = false) {
  const std::size_t P = l1.size();
  if (ls.size() != P || lw_star.size() != P) throw std::invalid_argument("assemble: theta-gradient lengths differ");
  if (!(xi > 0.0)) throw std::invalid_argument("assemble: xi must be > 0");
  if (!(lambda_bar >= 0.0)) throw std::invalid_argument("assemble: lambda_bar must be >= 0");
  Directions d;
  d.delta_theta.resize(P);
  d.delta_nu.assign(lg_prime.size(), 0.0);
  if (lambda_bar == 0.0) {
    for (std::size_t k = 0; k < P; ++k) d.delta_theta[k] = -l1[k];
    return d;
  }
  double factor = 1.0 - xi / lambda_bar;
  if (clamp_competitive_factor) factor = std::max(0.0, factor);
  for (std::size_t k = 0; k < P; ++k) d.delta_theta[k] = xi * lw_star[k] + factor * ls[k] - l1[k];
  for (std::size_t k = 0; k < lg_prime.size(); ++k) d.delta_nu[k] = factor * lg_prime[k];
  return d;
}

inline void assemble(GradientBundle& b, bool clamp_competitive_factor = false) {
  auto d = assemble(b.l1, b.ls, b.lg_prime, b.lw_star, b.xi, b.lambda_bar, clamp_competitive_factor);
  b.delta_theta = std::move(d.delta_theta);
  b.delta_nu = std::move(d.delta_nu);
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// |estimate - truth| / |truth| in the Euclidean norm.
inline double relative_l2_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("relative_l2_error: length mismatch");
  double num = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) num += (estimate[k] - truth[k]) * (estimate[k] - truth[k]);
  return std::sqrt(num) / l2_norm(truth);
}

/// Adam, used for the inner policy-gradient loops (unified solution and best
/// responses). `ascend` moves params along +grad.
struct Adam {
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m, v;
  long step_count = 0;

  void ascend(std::vector<double>& params, std::span<const double> grad) {
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
      step_count = 0;
    }
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
      params[k] += lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }
};

}  // namespace ncb
