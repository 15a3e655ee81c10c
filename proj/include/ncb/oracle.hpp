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

// Exact evaluation on small markets by enumerating every trajectory.
//
// The branching per episode is: one base_noise atom per agent, then at each
// step one action per active agent, and per impression one value_noise atom
// per agent plus (in random tie-break mode) one of the N! priority orders.
// Each leaf carries its exact probability. Sums use Neumaier compensation.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncb/market.hpp"
#include "ncb/policy.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

struct OracleLimits {
  double max_trajectories = 1e7;
  double max_policy_candidates = 1e6;
};

class OracleBoundExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compensated (Neumaier) running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Action probabilities for a local observation, written into a span of size K.
using ObservationPolicy = std::function<void(const AgentLocalState&, std::span<double>)>;

inline ObservationPolicy params_policy(const PolicyParams& p) {
  auto owned = std::make_shared<const PolicyParams>(p);
  return [owned](const AgentLocalState& s, std::span<double> out) { probs_into(*owned, s, out); };
}

inline ObservationPolicy uniform_policy() {
  return [](const AgentLocalState&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  };
}

inline ObservationPolicy constant_action_policy(int action) {
  return [action](const AgentLocalState&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(action)] = 1.0;
  };
}

/// Everything an agent can condition on.
struct ObservationKey {
  std::size_t step = 0;
  double budget_remaining = 0.0;
  double spent = 0.0;
  double base_value = 0.0;
  std::array<double, kContextDim> context{};

  auto operator<=>(const ObservationKey&) const = default;
};

inline ObservationKey observation_key(const AgentLocalState& s) {
  return {s.step, s.budget_remaining, s.spent, s.base_value, s.context};
}

/// Deterministic memoryless policy. Observations missing from the table play
/// `fallback`.
struct PolicyTable {
  std::map<ObservationKey, int> actions;
  int fallback = 0;

  int action(const AgentLocalState& s) const {
    const auto it = actions.find(observation_key(s));
    return it == actions.end() ? fallback : it->second;
  }
};

inline ObservationPolicy table_policy(const PolicyTable& table) {
  auto owned = std::make_shared<const PolicyTable>(table);
  return [owned](const AgentLocalState& s, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(owned->action(s))] = 1.0;
  };
}

/// Throws unless the market fits the tiny enumerable class: N <= 3, T <= 3,
/// M = 1, K <= 3, discrete noise with at most 3 atoms.
inline void validate_tiny(const MarketConfig& cfg) {
  cfg.validate();
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument("market." + field + ": " + what + " for exact enumeration");
  };
  if (cfg.n_agents > 3) fail("n_agents", "must be <= 3");
  if (cfg.horizon > 3) fail("horizon", "must be <= 3");
  if (cfg.impressions_per_step != 1) fail("impressions_per_step", "must be 1");
  if (cfg.n_actions() > 3) fail("bid_levels", "must have <= 3 levels");
  if (!cfg.value_noise.is_discrete() || cfg.value_noise.atoms.size() > 3)
    fail("value_noise", "must be discrete with <= 3 atoms");
  if (!cfg.base_noise.is_discrete() || cfg.base_noise.atoms.size() > 3)
    fail("base_noise", "must be discrete with <= 3 atoms");
}

/// Upper bound on the number of enumerated leaves.
inline double trajectory_count_bound(const MarketConfig& cfg) {
  const double n = static_cast<double>(cfg.n_agents);
  const double base = std::pow(static_cast<double>(cfg.base_noise.atoms.size()), n);
  double orders = 1.0;
  if (cfg.tie_break == TieBreak::random)
    for (std::size_t k = 2; k <= cfg.n_agents; ++k) orders *= static_cast<double>(k);
  const double per_imp = std::pow(static_cast<double>(cfg.value_noise.atoms.size()), n) * orders;
  const double per_step =
      std::pow(static_cast<double>(cfg.n_actions()), n) * std::pow(per_imp, static_cast<double>(cfg.impressions_per_step));
  return base * std::pow(per_step, static_cast<double>(cfg.horizon));
}

/// Walks every trajectory of a policy profile, calling visit(traj, prob).
class TrajectoryEnumerator {
 public:
  explicit TrajectoryEnumerator(const MarketConfig& cfg, OracleLimits limits = {}) : cfg_(cfg) {
    cfg_.validate();
    if (!cfg_.base_noise.is_discrete() || !cfg_.value_noise.is_discrete())
      throw std::invalid_argument("exact enumeration needs discrete base_noise and value_noise");
    const double bound = trajectory_count_bound(cfg_);
    if (bound > limits.max_trajectories)
      throw OracleBoundExceeded("exact enumeration: " + std::to_string(bound) + " trajectories exceeds the limit of " +
                                std::to_string(limits.max_trajectories));
    build_draws();
  }

  const MarketConfig& config() const { return cfg_; }

  /// `focal` is only recorded on the trajectories; `weight` scales every
  /// probability passed to visit.
  template <class Visit>
  void run(std::span<const ObservationPolicy> policies, Visit&& visit, std::optional<std::size_t> focal = std::nullopt,
           double weight = 1.0) const {
    const std::size_t n = cfg_.n_agents, T = cfg_.horizon;
    if (policies.size() != n) throw std::invalid_argument("enumerate: need one policy per agent");
    Trajectory traj;
    traj.focal_agent = focal;
    traj.states.resize(T);
    traj.actions.assign(T, std::vector<int>(n, kNoAction));
    traj.rewards.assign(n, std::vector<double>(T, 0.0));
    traj.costs.assign(n, std::vector<double>(T, 0.0));
    for (const auto& [draws, p] : base_draws_) {
      if (p == 0.0) continue;
      GlobalState s0 = initial_state_from_draws(cfg_, draws);
      recurse(policies, 0, std::move(s0), weight * p, traj, visit);
    }
  }

 private:
  struct ImpressionDraw {
    std::vector<double> noise;
    std::vector<double> priority;
    double prob;
  };

  void build_draws() {
    const std::size_t n = cfg_.n_agents;
    // Base draws: cartesian product of atoms over agents.
    for_each_tuple(cfg_.base_noise, [&](const std::vector<double>& v, double p) { base_draws_.emplace_back(v, p); });
    std::vector<std::vector<double>> orders;
    if (cfg_.tie_break == TieBreak::random) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        std::vector<double> pr(n);
        for (std::size_t i = 0; i < n; ++i) pr[i] = static_cast<double>(perm[i]);
        orders.push_back(std::move(pr));
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      orders.emplace_back();
    }
    const double order_p = 1.0 / static_cast<double>(orders.size());
    std::vector<ImpressionDraw> single;
    for_each_tuple(cfg_.value_noise, [&](const std::vector<double>& v, double p) {
      if (p == 0.0) return;
      for (const auto& pr : orders) single.push_back({v, pr, p * order_p});
    });
    // M impressions per step: product of single draws.
    imp_draws_.push_back({{}, 1.0});
    for (std::size_t m = 0; m < cfg_.impressions_per_step; ++m) {
      std::vector<std::pair<std::vector<std::size_t>, double>> next;
      for (const auto& [idx, p] : imp_draws_)
        for (std::size_t k = 0; k < single.size(); ++k) {
          auto v = idx;
          v.push_back(k);
          next.emplace_back(std::move(v), p * single[k].prob);
        }
      imp_draws_ = std::move(next);
    }
    single_ = std::move(single);
  }

  template <class Fn>
  void for_each_tuple(const Distribution1D& d, Fn&& fn) const {
    const std::size_t n = cfg_.n_agents, A = d.atoms.size();
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      std::vector<double> v(n);
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = d.atoms[idx[i]];
        p *= d.probs[idx[i]];
      }
      fn(v, p);
      std::size_t i = 0;
      while (i < n && ++idx[i] == A) idx[i++] = 0;
      if (i == n) break;
    }
  }

  template <class Visit>
  void recurse(std::span<const ObservationPolicy> policies, std::size_t t, GlobalState state, double prob,
               Trajectory& traj, Visit& visit) const {
    const std::size_t n = cfg_.n_agents, K = cfg_.n_actions();
    if (t == cfg_.horizon) {
      traj.compute_reward_to_go();
      visit(static_cast<const Trajectory&>(traj), prob);
      return;
    }
    // Per-agent supports.
    std::vector<std::vector<std::pair<int, double>>> support(n);
    std::vector<double> probs(K);
    for (std::size_t i = 0; i < n; ++i) {
      if (!state.locals[i].active) {
        support[i].push_back({kNoAction, 1.0});
        continue;
      }
      policies[i](state.locals[i], probs);
      for (std::size_t k = 0; k < K; ++k)
        if (probs[k] > 0.0) support[i].push_back({static_cast<int>(k), probs[k]});
    }
    std::vector<std::size_t> idx(n, 0);
    std::vector<int> joint(n);
    std::vector<Impression> imps(cfg_.impressions_per_step);
    while (true) {
      double pa = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        joint[i] = support[i][idx[i]].first;
        pa *= support[i][idx[i]].second;
      }
      for (const auto& [draw_idx, pi] : imp_draws_) {
        for (std::size_t m = 0; m < draw_idx.size(); ++m) {
          const auto& d = single_[draw_idx[m]];
          imps[m] = make_impression(state, d.noise, d.priority);
        }
        StepResult res = step(state, joint, cfg_, imps);
        traj.states[t] = state;
        traj.actions[t] = joint;
        for (std::size_t i = 0; i < n; ++i) {
          traj.rewards[i][t] = res.rewards[i];
          traj.costs[i][t] = res.costs[i];
        }
        recurse(policies, t + 1, std::move(res.next), prob * pa * pi, traj, visit);
      }
      std::size_t i = 0;
      while (i < n && ++idx[i] == support[i].size()) idx[i++] = 0;
      if (i == n) break;
    }
  }

  MarketConfig cfg_;
  std::vector<std::pair<std::vector<double>, double>> base_draws_;
  std::vector<ImpressionDraw> single_;
  std::vector<std::pair<std::vector<std::size_t>, double>> imp_draws_;
};

// Exact returns -----------------------------------------------------------

inline std::vector<double> exact_returns(std::span<const ObservationPolicy> policies, const MarketConfig& cfg,
                                         OracleLimits limits = {}) {
  TrajectoryEnumerator en(cfg, limits);
  std::vector<CompensatedSum> acc(cfg.n_agents);
  en.run(policies, [&](const Trajectory& tr, double p) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i].add(p * tr.total_reward(i));
  });
  std::vector<double> out;
  for (const auto& a : acc) out.push_back(a.value());
  return out;
}

inline std::vector<ObservationPolicy> as_observation_policies(std::span<const PolicyParams> policies) {
  std::vector<ObservationPolicy> out;
  for (const auto& p : policies) out.push_back(params_policy(p));
  return out;
}

inline std::vector<double> exact_returns(std::span<const PolicyParams> policies, const MarketConfig& cfg,
                                         OracleLimits limits = {}) {
  const auto obs = as_observation_policies(policies);
  return exact_returns(std::span<const ObservationPolicy>(obs), cfg, limits);
}

/// G_i(theta) for every agent under the shared policy.
inline std::vector<double> exact_returns_shared(const PolicyParams& theta, const MarketConfig& cfg,
                                                OracleLimits limits = {}) {
  std::vector<ObservationPolicy> obs(cfg.n_agents, params_policy(theta));
  return exact_returns(std::span<const ObservationPolicy>(obs), cfg, limits);
}

/// G_i(rho; theta): agent `focal` plays rho, the rest play theta.
inline double exact_focal_return(const PolicyParams& rho, const PolicyParams& theta, std::size_t focal,
                                 const MarketConfig& cfg, OracleLimits limits = {}) {
  std::vector<ObservationPolicy> obs(cfg.n_agents, params_policy(theta));
  obs.at(focal) = params_policy(rho);
  return exact_returns(std::span<const ObservationPolicy>(obs), cfg, limits)[focal];
}

/// G_w(rho; theta) by enumerating the weighted initial distribution directly:
/// the focal index is one more branch with probability kappa_i.
inline double exact_weighted_return(const PolicyParams& rho, const PolicyParams& theta, std::span<const double> kappa,
                                    const MarketConfig& cfg, OracleLimits limits = {}) {
  check_simplex(kappa, cfg.n_agents);
  TrajectoryEnumerator en(cfg, limits);
  const auto th = params_policy(theta), rh = params_policy(rho);
  CompensatedSum acc;
  for (std::size_t i = 0; i < cfg.n_agents; ++i) {
    if (kappa[i] == 0.0) continue;
    std::vector<ObservationPolicy> obs(cfg.n_agents, th);
    obs[i] = rh;
    en.run(
        obs, [&](const Trajectory& tr, double p) { acc.add(p * tr.total_reward(*tr.focal_agent)); }, i, kappa[i]);
  }
  return acc.value();
}

/// E[f(trajectory)] for a vector-valued integrand of length `dim`, under the
/// given profile (`focal` recorded on the trajectories).
template <class F>
std::vector<double> exact_expectation(std::span<const ObservationPolicy> policies, const MarketConfig& cfg,
                                      std::size_t dim, F&& f, std::optional<std::size_t> focal = std::nullopt,
                                      OracleLimits limits = {}) {
  TrajectoryEnumerator en(cfg, limits);
  std::vector<CompensatedSum> acc(dim);
  en.run(
      policies,
      [&](const Trajectory& tr, double p) {
        const std::vector<double> v = f(tr);
        for (std::size_t k = 0; k < dim; ++k) acc[k].add(p * v[k]);
      },
      focal);
  std::vector<double> out;
  for (const auto& a : acc) out.push_back(a.value());
  return out;
}

// Finite-difference gradient oracles -------------------------------------

inline constexpr double kFiniteDifferenceStep = 1e-4;

/// Central differences of a scalar function of the parameters.
inline std::vector<double> finite_difference_gradient(const std::function<double(const PolicyParams&)>& f,
                                                      const PolicyParams& at, double h = kFiniteDifferenceStep) {
  std::vector<double> g(at.values.size());
  PolicyParams p = at;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = at.values[k];
    p.values[k] = x + h;
    const double up = f(p);
    p.values[k] = x - h;
    const double down = f(p);
    p.values[k] = x;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// sum_i (1 + lambda_i) grad_theta G_i(theta).
inline std::vector<double> exact_grad_L1(const PolicyParams& theta, std::span<const double> lambda,
                                         const MarketConfig& cfg, double h = kFiniteDifferenceStep) {
  const std::vector<double> lam(lambda.begin(), lambda.end());
  return finite_difference_gradient(
      [&](const PolicyParams& th) {
        const auto g = exact_returns_shared(th, cfg);
        CompensatedSum s;
        for (std::size_t i = 0; i < g.size(); ++i) s.add((1.0 + lam[i]) * g[i]);
        return s.value();
      },
      theta, h);
}

/// lambda_bar * grad_theta G_w(nu; theta).
inline std::vector<double> exact_grad_Ls(const PolicyParams& nu, const PolicyParams& theta,
                                         std::span<const double> kappa, double lambda_bar, const MarketConfig& cfg,
                                         double h = kFiniteDifferenceStep) {
  auto g = finite_difference_gradient(
      [&](const PolicyParams& th) { return exact_weighted_return(nu, th, kappa, cfg); }, theta, h);
  for (auto& x : g) x *= lambda_bar;
  return g;
}

/// lambda_bar * grad_nu G_w(nu; theta).
inline std::vector<double> exact_grad_Lg_prime(const PolicyParams& nu, const PolicyParams& theta,
                                               std::span<const double> kappa, double lambda_bar,
                                               const MarketConfig& cfg, double h = kFiniteDifferenceStep) {
  auto g = finite_difference_gradient(
      [&](const PolicyParams& n) { return exact_weighted_return(n, theta, kappa, cfg); }, nu, h);
  for (auto& x : g) x *= lambda_bar;
  return g;
}

/// grad_theta G_w(x*; theta) with x* held fixed.
inline std::vector<double> exact_grad_Lw_star(const PolicyParams& x_star, const PolicyParams& theta,
                                              std::span<const double> kappa, const MarketConfig& cfg,
                                              double h = kFiniteDifferenceStep) {
  return finite_difference_gradient(
      [&](const PolicyParams& th) { return exact_weighted_return(x_star, th, kappa, cfg); }, theta, h);
}

// Exact best response -----------------------------------------------------

struct BestResponse {
  PolicyTable policy;
  double value = 0.0;
  std::size_t observations = 0;  // reachable local observations of the agent
  double candidates = 0.0;       // size of the deterministic policy class searched
};

/// Local observations agent i can reach against the given opponents, with i
/// playing every action with positive probability. Any policy of i reaches a
/// subset of these.
inline std::vector<ObservationKey> reachable_observations(std::size_t agent,
                                                          std::span<const ObservationPolicy> policies,
                                                          const MarketConfig& cfg, OracleLimits limits = {}) {
  TrajectoryEnumerator en(cfg, limits);
  std::vector<ObservationPolicy> obs(policies.begin(), policies.end());
  obs.at(agent) = uniform_policy();
  std::map<ObservationKey, bool> seen;
  en.run(obs, [&](const Trajectory& tr, double p) {
    if (p == 0.0) return;
    for (const auto& s : tr.states)
      if (s.locals[agent].active) seen[observation_key(s.locals[agent])] = true;
  });
  std::vector<ObservationKey> out;
  for (const auto& [k, _] : seen) out.push_back(k);
  return out;
}

namespace detail {
inline double check_candidates(std::size_t K, std::size_t n_obs, const OracleLimits& limits) {
  const double c = std::pow(static_cast<double>(K), static_cast<double>(n_obs));
  if (c > limits.max_policy_candidates)
    throw OracleBoundExceeded("exact best response: " + std::to_string(c) + " deterministic policies exceeds the limit");
  return c;
}

/// Odometer over assignments of K actions to `slots` positions.
inline bool next_assignment(std::vector<int>& a, std::size_t K) {
  std::size_t i = 0;
  while (i < a.size() && ++a[i] == static_cast<int>(K)) a[i++] = 0;
  return i < a.size();
}
}  // namespace detail

/// Maximizes G_i over deterministic maps from reachable local observations to
/// actions. Assignments at steps before the last are enumerated; the last
/// step's choice is separable per observation and taken greedily, which is
/// exact because no later reward depends on it.
inline BestResponse exact_best_response(std::size_t agent, std::span<const ObservationPolicy> policies,
                                        const MarketConfig& cfg, OracleLimits limits = {}) {
  if (agent >= cfg.n_agents) throw std::out_of_range("exact_best_response: agent out of range");
  const std::size_t K = cfg.n_actions(), T = cfg.horizon;
  const auto all_obs = reachable_observations(agent, policies, cfg, limits);
  BestResponse best;
  best.observations = all_obs.size();
  best.candidates = detail::check_candidates(K, all_obs.size(), limits);

  std::vector<ObservationKey> prefix;
  std::map<ObservationKey, std::size_t> last_index;
  for (const auto& o : all_obs) {
    if (o.step + 1 < T)
      prefix.push_back(o);
    else
      last_index.emplace(o, last_index.size());
  }

  TrajectoryEnumerator en(cfg, limits);
  std::vector<int> assign(prefix.size(), 0);
  bool have = false;
  do {
    PolicyTable prefix_table;
    for (std::size_t k = 0; k < prefix.size(); ++k) prefix_table.actions[prefix[k]] = assign[k];
    const auto table = std::make_shared<const PolicyTable>(prefix_table);
    std::vector<ObservationPolicy> obs(policies.begin(), policies.end());
    obs[agent] = [table, T](const AgentLocalState& s, std::span<double> out) {
      if (s.step + 1 >= T) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
        return;
      }
      std::fill(out.begin(), out.end(), 0.0);
      out[static_cast<std::size_t>(table->action(s))] = 1.0;
    };
    CompensatedSum prefix_value;
    std::vector<std::vector<CompensatedSum>> last_value(last_index.size(), std::vector<CompensatedSum>(K));
    en.run(obs, [&](const Trajectory& tr, double p) {
      for (std::size_t t = 0; t + 1 < T; ++t) prefix_value.add(p * tr.rewards[agent][t]);
      const auto& s = tr.states[T - 1].locals[agent];
      if (!s.active) return;
      const int a = tr.actions[T - 1][agent];
      // p includes the uniform 1/K for the last action; undo it.
      last_value[last_index.at(observation_key(s))][static_cast<std::size_t>(a)].add(
          p * static_cast<double>(K) * tr.rewards[agent][T - 1]);
    });
    CompensatedSum total;
    total.add(prefix_value.value());
    PolicyTable candidate = prefix_table;
    for (const auto& [key, li] : last_index) {
      std::size_t arg = 0;
      for (std::size_t k = 1; k < K; ++k)
        if (last_value[li][k].value() > last_value[li][arg].value()) arg = k;
      candidate.actions[key] = static_cast<int>(arg);
      total.add(last_value[li][arg].value());
    }
    if (!have || total.value() > best.value) {
      best.value = total.value();
      best.policy = std::move(candidate);
      have = true;
    }
  } while (detail::next_assignment(assign, K));
  return best;
}

/// Same search without the last-step decomposition: every deterministic map
/// is scored by exact_returns. Only for cross-checking on very small markets.
inline BestResponse exact_best_response_exhaustive(std::size_t agent, std::span<const ObservationPolicy> policies,
                                                   const MarketConfig& cfg, OracleLimits limits = {}) {
  if (agent >= cfg.n_agents) throw std::out_of_range("exact_best_response: agent out of range");
  const std::size_t K = cfg.n_actions();
  const auto all_obs = reachable_observations(agent, policies, cfg, limits);
  BestResponse best;
  best.observations = all_obs.size();
  best.candidates = detail::check_candidates(K, all_obs.size(), limits);
  std::vector<int> assign(all_obs.size(), 0);
  bool have = false;
  do {
    PolicyTable table;
    for (std::size_t k = 0; k < all_obs.size(); ++k) table.actions[all_obs[k]] = assign[k];
    std::vector<ObservationPolicy> obs(policies.begin(), policies.end());
    obs[agent] = table_policy(table);
    const double v = exact_returns(std::span<const ObservationPolicy>(obs), cfg, limits)[agent];
    if (!have || v > best.value) {
      best.value = v;
      best.policy = std::move(table);
      have = true;
    }
  } while (detail::next_assignment(assign, K));
  return best;
}

/// Best response of agent i when every other agent plays theta.
inline BestResponse exact_best_response(std::size_t agent, const PolicyParams& theta, const MarketConfig& cfg,
                                        OracleLimits limits = {}) {
  std::vector<ObservationPolicy> obs(cfg.n_agents, params_policy(theta));
  return exact_best_response(agent, obs, cfg, limits);
}

}  // namespace ncb
