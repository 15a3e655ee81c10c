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

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ncb/market.hpp"
#include "ncb/policy.hpp"

namespace ncb::testing {

/// Two agents, two steps, one impression per step, three bid levels.
inline MarketConfig tiny_market() {
  MarketConfig c;
  c.n_agents = 2;
  c.horizon = 2;
  c.impressions_per_step = 1;
  c.budgets = {1.5, 1.2};
  c.base_values = {1.0, 1.25};
  c.base_noise = Distribution1D::constant(1.0);
  c.value_noise = Distribution1D::discrete({0.6, 1.0, 1.5}, {0.3, 0.4, 0.3});
  c.reserve_price = 0.1;
  c.bid_levels = {0.0, 0.7, 1.3};
  return c;
}

/// Two interchangeable agents with random tie-breaking.
inline MarketConfig symmetric_tiny_market() {
  MarketConfig c = tiny_market();
  c.budgets = {1.3, 1.3};
  c.base_values = {1.0, 1.0};
  c.tie_break = TieBreak::random;
  return c;
}

inline PolicyParams random_policy(const MarketConfig& c, std::uint64_t seed, double scale = 0.5,
                                  std::size_t embed_dim = 2) {
  Rng rng(seed);
  return PolicyParams::random(arch_for(c, embed_dim), rng, scale);
}

inline double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double relative_l2_error(std::span<const double> estimate, std::span<const double> truth) {
  double num = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) num += (estimate[k] - truth[k]) * (estimate[k] - truth[k]);
  return std::sqrt(num) / l2(truth);
}

inline AgentLocalState sample_local_state(const MarketConfig& c, Rng& rng) {
  AgentLocalState s;
  s.agent_index = rng.below(c.n_agents);
  s.horizon = c.horizon;
  s.step = rng.below(c.horizon);
  s.spent = rng.uniform(0.0, c.budgets[s.agent_index]);
  s.budget_remaining = c.budgets[s.agent_index] - s.spent;
  s.context = {rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)};
  s.base_value = rng.uniform(0.5, 1.5);
  s.active = true;
  return s;
}

}  // namespace ncb::testing
