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

// The budget-constrained bidding game: N advertisers bid on M impressions per
// time step through a single-slot second-price auction with a reserve price.
//
// Agent i's value for an impression is base_i * u, where base_i is drawn once
// per episode (base_values[i] times a draw from base_noise) and u is drawn
// independently per (agent, impression) from value_noise. An action is an
// index into bid_levels; the submitted bid is bid_levels[a] * value.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncb/rng.hpp"

namespace ncb {

/// A scalar distribution that is either Uniform(lo, hi) or a finite set of
/// weighted atoms. The oracle can only enumerate the discrete kind.
struct Distribution1D {
  enum class Kind { uniform, discrete };

  Kind kind = Kind::discrete;
  double lo = 1.0;
  double hi = 1.0;
  std::vector<double> atoms{1.0};
  std::vector<double> probs{1.0};

  static Distribution1D uniform(double lo, double hi) {
    Distribution1D d;
    d.kind = Kind::uniform;
    d.lo = lo;
    d.hi = hi;
    d.atoms.clear();
    d.probs.clear();
    return d;
  }

  static Distribution1D discrete(std::vector<double> atoms, std::vector<double> probs) {
    Distribution1D d;
    d.kind = Kind::discrete;
    d.lo = d.hi = 0.0;
    d.atoms = std::move(atoms);
    d.probs = std::move(probs);
    return d;
  }

  static Distribution1D constant(double v) { return discrete({v}, {1.0}); }

  bool is_discrete() const { return kind == Kind::discrete; }

  double sample(Rng& rng) const {
    if (kind == Kind::uniform) return rng.uniform(lo, hi);
    return atoms[rng.categorical(probs)];
  }

  /// Throws std::invalid_argument naming `field` when malformed.
  void validate(const std::string& field) const {
    if (kind == Kind::uniform) {
      if (!(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && lo <= hi))
        throw std::invalid_argument(field + ": uniform bounds must satisfy 0 <= lo <= hi");
      return;
    }
    if (atoms.empty() || atoms.size() != probs.size())
      throw std::invalid_argument(field + ": discrete atoms and probabilities must be non-empty and equal length");
    double total = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (!(std::isfinite(atoms[k]) && atoms[k] >= 0.0))
        throw std::invalid_argument(field + ": atoms must be finite and non-negative");
      if (!(probs[k] >= 0.0)) throw std::invalid_argument(field + ": probabilities must be non-negative");
      total += probs[k];
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(field + ": probabilities must sum to 1");
  }

  bool operator==(const Distribution1D&) const = default;
};

enum class TieBreak { lowest_index, random };

struct MarketConfig {
  std::size_t n_agents = 1;
  std::size_t horizon = 1;
  std::size_t impressions_per_step = 1;
  std::vector<double> budgets{1.0};
  std::vector<double> base_values{1.0};
  Distribution1D base_noise = Distribution1D::constant(1.0);
  Distribution1D value_noise = Distribution1D::uniform(0.5, 1.5);
  double reserve_price = 0.0;
  std::vector<double> bid_levels{0.0, 0.5, 1.0, 1.5, 2.0};
  TieBreak tie_break = TieBreak::lowest_index;
  std::uint64_t seed = 0;

  std::size_t n_actions() const { return bid_levels.size(); }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& what) {
      throw std::invalid_argument("market." + field + ": " + what);
    };
    if (n_agents < 1) fail("n_agents", "must be >= 1");
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (impressions_per_step < 1) fail("impressions_per_step", "must be >= 1");
    if (budgets.size() != n_agents) fail("budgets", "length must equal n_agents");
    for (double b : budgets)
      if (!(std::isfinite(b) && b >= 0.0)) fail("budgets", "entries must be finite and >= 0");
    if (base_values.size() != n_agents) fail("base_values", "length must equal n_agents");
    for (double v : base_values)
      if (!(std::isfinite(v) && v >= 0.0)) fail("base_values", "entries must be finite and >= 0");
    base_noise.validate("market.base_noise");
    value_noise.validate("market.value_noise");
    if (!(std::isfinite(reserve_price) && reserve_price >= 0.0)) fail("reserve_price", "must be finite and >= 0");
    if (bid_levels.size() < 2) fail("bid_levels", "needs at least 2 levels");
    for (std::size_t k = 0; k < bid_levels.size(); ++k) {
      if (!(std::isfinite(bid_levels[k]) && bid_levels[k] >= 0.0)) fail("bid_levels", "entries must be finite and >= 0");
      if (k > 0 && !(bid_levels[k] > bid_levels[k - 1])) fail("bid_levels", "must be strictly increasing");
    }
  }

  bool operator==(const MarketConfig&) const = default;
};

inline constexpr int kNoAction = -1;
inline constexpr std::size_t kContextDim = 2;

struct AgentLocalState {
  std::size_t agent_index = 0;
  double budget_remaining = 0.0;
  double spent = 0.0;  // budget_remaining == budget - spent, kept separately for exact feasibility
  std::size_t step = 0;
  std::size_t horizon = 1;
  std::array<double, kContextDim> context{};  // {base_i / mean base, B_i / mean budget}
  double base_value = 0.0;
  bool active = false;

  bool operator==(const AgentLocalState&) const = default;
};

struct GlobalState {
  std::vector<AgentLocalState> locals;

  std::size_t step() const { return locals.empty() ? 0 : locals.front().step; }
  bool operator==(const GlobalState&) const = default;
};

struct Impression {
  std::vector<double> feature;   // the per-agent noise draws u
  std::vector<double> values;    // v_i = base_i * u_i
  std::vector<double> priority;  // tie-break keys; empty means lowest index wins
};

struct AuctionOutcome {
  std::optional<std::size_t> winner;
  double price = 0.0;
  std::vector<double> per_agent_cost;
  std::vector<double> per_agent_reward;
};

struct StepResult {
  GlobalState next;
  std::vector<double> rewards;
  std::vector<double> costs;
};

namespace detail {
inline double mean_or_one(const std::vector<double>& v) {
  const double m = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return m > 0.0 ? m : 1.0;
}

inline bool is_active(const MarketConfig& config, double remaining, std::size_t step) {
  return step < config.horizon && remaining > 0.0 && remaining >= config.reserve_price;
}
}  // namespace detail

/// Builds the initial state from explicit per-agent base multipliers (one draw
/// of base_noise per agent). Used directly by exhaustive enumeration.
inline GlobalState initial_state_from_draws(const MarketConfig& config, std::span<const double> base_draws) {
  if (base_draws.size() != config.n_agents) throw std::invalid_argument("initial_state_from_draws: need one draw per agent");
  const double ref_value = detail::mean_or_one(config.base_values);
  const double ref_budget = detail::mean_or_one(config.budgets);
  GlobalState state;
  state.locals.resize(config.n_agents);
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    auto& s = state.locals[i];
    s.agent_index = i;
    s.budget_remaining = config.budgets[i];
    s.spent = 0.0;
    s.step = 0;
    s.horizon = config.horizon;
    s.base_value = config.base_values[i] * base_draws[i];
    s.context = {s.base_value / ref_value, config.budgets[i] / ref_budget};
    s.active = detail::is_active(config, s.budget_remaining, 0);
  }
  return state;
}

inline GlobalState sample_initial_state(const MarketConfig& config, Rng& rng) {
  std::vector<double> draws(config.n_agents);
  for (auto& d : draws) d = config.base_noise.sample(rng);
  return initial_state_from_draws(config, draws);
}

namespace detail {
struct Clearing {
  std::optional<std::size_t> winner;
  double price = 0.0;
};

/// Winner and price only, no allocation. `priority` may be empty.
inline Clearing clear(std::span<const double> bids, std::span<const double> priority, double reserve) {
  const std::size_t n = bids.size();
  const bool use_priority = !priority.empty();
  Clearing out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bids[i] > reserve)) continue;
    if (!out.winner || bids[i] > bids[*out.winner] ||
        (bids[i] == bids[*out.winner] && use_priority && priority[i] > priority[*out.winner])) {
      out.winner = i;
    }
  }
  if (!out.winner) return out;
  double second = reserve;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == *out.winner || !(bids[i] > reserve)) continue;
    second = std::max(second, bids[i]);
  }
  out.price = second;
  return out;
}
}  // namespace detail

/// Single-slot second-price auction. Bids must be non-negative; a bid
/// qualifies only when strictly above the reserve. Ties go to the highest
/// priority when priorities are given, otherwise to the lowest index.
inline AuctionOutcome auction(std::span<const double> bids, const Impression& imp, double reserve) {
  const std::size_t n = bids.size();
  if (imp.values.size() != n) throw std::invalid_argument("auction: bids and values differ in length");
  if (!imp.priority.empty() && imp.priority.size() != n) throw std::invalid_argument("auction: priority length mismatch");
  for (double b : bids)
    if (b < 0.0) throw std::invalid_argument("auction: negative bid");

  AuctionOutcome out;
  out.per_agent_cost.assign(n, 0.0);
  out.per_agent_reward.assign(n, 0.0);
  const auto c = detail::clear(bids, imp.priority, reserve);
  if (!c.winner) return out;
  out.winner = c.winner;
  out.price = c.price;
  out.per_agent_cost[*c.winner] = c.price;
  out.per_agent_reward[*c.winner] = imp.values[*c.winner];
  return out;
}

/// Values and tie-break keys for one impression given the noise draws.
inline Impression make_impression(const GlobalState& state, std::vector<double> noise,
                                  std::vector<double> priority = {}) {
  Impression imp;
  imp.values.resize(state.locals.size());
  for (std::size_t i = 0; i < state.locals.size(); ++i) imp.values[i] = state.locals[i].base_value * noise[i];
  imp.feature = std::move(noise);
  imp.priority = std::move(priority);
  return imp;
}

namespace detail {
/// Fills `imp` with one impression's draws, reusing its storage.
inline void fill_impression(const GlobalState& state, const MarketConfig& config, Rng& rng, Impression& imp) {
  const std::size_t n = config.n_agents;
  imp.feature.resize(n);
  imp.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    imp.feature[i] = config.value_noise.sample(rng);
    imp.values[i] = state.locals[i].base_value * imp.feature[i];
  }
  if (config.tie_break == TieBreak::random) {
    imp.priority.resize(n);
    for (auto& p : imp.priority) p = rng.uniform();
  } else {
    imp.priority.clear();
  }
}
}  // namespace detail

inline std::vector<Impression> draw_impressions(const GlobalState& state, const MarketConfig& config, Rng& rng) {
  std::vector<Impression> imps(config.impressions_per_step);
  for (auto& imp : imps) detail::fill_impression(state, config, rng, imp);
  return imps;
}

namespace detail {
template <class NextImpression>
StepResult step_with(const GlobalState& state, std::span<const int> joint_actions, const MarketConfig& config,
                     std::size_t count, NextImpression&& next_impression) {
  const std::size_t n = config.n_agents;
  if (state.locals.size() != n || joint_actions.size() != n) throw std::invalid_argument("step: size mismatch");
  if (state.step() >= config.horizon) throw std::logic_error("step: episode already terminated");

  StepResult res;
  res.next = state;
  res.rewards.assign(n, 0.0);
  res.costs.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.locals[i].active) continue;
    const int a = joint_actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= config.n_actions())
      throw std::invalid_argument("step: action index out of range for active agent " + std::to_string(i));
  }

  std::vector<double> bids(n);
  std::vector<char> excluded(n);
  for (std::size_t m = 0; m < count; ++m) {
    const Impression& imp = next_impression(m);
    if (imp.values.size() != n) throw std::invalid_argument("step: impression size mismatch");
    if (!imp.priority.empty() && imp.priority.size() != n) throw std::invalid_argument("step: priority length mismatch");
    for (std::size_t i = 0; i < n; ++i)
      excluded[i] = !(state.locals[i].active && res.next.locals[i].budget_remaining > 0.0);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) {
        bids[i] = excluded[i] ? 0.0 : config.bid_levels[joint_actions[i]] * imp.values[i];
        if (bids[i] < 0.0) throw std::invalid_argument("auction: negative bid");
      }
      const auto out = detail::clear(bids, imp.priority, config.reserve_price);
      if (!out.winner) break;
      const std::size_t w_idx = *out.winner;
      auto& w = res.next.locals[w_idx];
      if (w.spent + out.price > config.budgets[w_idx]) {
        excluded[w_idx] = 1;
        continue;
      }
      w.spent += out.price;
      w.budget_remaining = config.budgets[w_idx] - w.spent;
      res.costs[w_idx] += out.price;
      res.rewards[w_idx] += imp.values[w_idx];
      break;
    }
  }
  for (auto& s : res.next.locals) {
    s.step += 1;
    s.budget_remaining = std::max(0.0, s.budget_remaining);
    s.active = detail::is_active(config, s.budget_remaining, s.step);
  }
  return res;
}
}  // namespace detail

/// Advances one time step with the given impressions. Inactive agents bid 0;
/// a winner that cannot afford the price is excluded and the impression is
/// re-auctioned among the rest.
inline StepResult step(const GlobalState& state, std::span<const int> joint_actions, const MarketConfig& config,
                       std::span<const Impression> impressions) {
  return detail::step_with(state, joint_actions, config, impressions.size(),
                           [&](std::size_t m) -> const Impression& { return impressions[m]; });
}

/// Same as above with impressions drawn from `rng`, one at a time.
inline StepResult step(const GlobalState& state, std::span<const int> joint_actions, const MarketConfig& config,
                       Rng& rng) {
  Impression imp;
  return detail::step_with(state, joint_actions, config, config.impressions_per_step,
                           [&](std::size_t) -> const Impression& {
                             detail::fill_impression(state, config, rng, imp);
                             return imp;
                           });
}

// Relabeling helpers. A permutation maps agent i to position perm[i].

inline void check_permutation(std::span<const std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) throw std::invalid_argument("not a permutation");
    seen[p] = true;
  }
}

template <class T>
std::vector<T> permute(std::span<const T> in, std::span<const std::size_t> perm) {
  check_permutation(perm);
  if (in.size() != perm.size()) throw std::invalid_argument("permute: length mismatch");
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[perm[i]] = in[i];
  return out;
}

template <class T>
std::vector<T> permute(const std::vector<T>& in, std::span<const std::size_t> perm) {
  return permute(std::span<const T>(in), perm);
}

inline MarketConfig permute(const MarketConfig& config, std::span<const std::size_t> perm) {
  MarketConfig out = config;
  out.budgets = permute(config.budgets, perm);
  out.base_values = permute(config.base_values, perm);
  return out;
}

inline GlobalState permute(const GlobalState& state, std::span<const std::size_t> perm) {
  GlobalState out;
  out.locals = permute(state.locals, perm);
  for (std::size_t i = 0; i < out.locals.size(); ++i) out.locals[i].agent_index = i;
  return out;
}

inline Impression permute(const Impression& imp, std::span<const std::size_t> perm) {
  Impression out;
  out.feature = permute(imp.feature, perm);
  out.values = permute(imp.values, perm);
  if (!imp.priority.empty()) out.priority = permute(imp.priority, perm);
  return out;
}

}  // namespace ncb
