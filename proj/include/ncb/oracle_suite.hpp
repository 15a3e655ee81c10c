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

// The oracle validation suite run by `ncb oracle-check`: every sampled
// estimator is compared against exact enumeration on a tiny market.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ncb/exploitability.hpp"
#include "ncb/gradients.hpp"
#include "ncb/oracle.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct OracleSuiteOptions {
  std::size_t mc_episodes = 100000;
  double gradient_tolerance = 0.05;   // relative L2 error
  double exact_tolerance = 1e-12;
  double score_tolerance = 1e-10;
  double best_response_tolerance = 0.10;  // relative to the exact BR return
  BestResponseConfig br;
  std::uint64_t seed = 0;
};

namespace suite_detail {
inline std::string num(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

inline PolicyParams random_policy(const MarketConfig& c, Rng& rng, double scale) {
  return PolicyParams::random(arch_for(c, 2), rng, scale);
}

/// Random probability vector of length n.
inline std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> k(n);
  for (auto& x : k) x = 0.05 + rng.uniform();
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& x : k) x /= s;
  return k;
}

template <class Body>
CheckResult guarded(const std::string& name, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, std::string("error: ") + e.what()};
  }
}
}  // namespace suite_detail

inline std::vector<CheckResult> run_oracle_suite(const MarketConfig& cfg, const OracleSuiteOptions& opt = {}) {
  using namespace suite_detail;
  std::vector<CheckResult> out;
  Rng rng(derive_key(opt.seed, 0x0c1eULL));
  const std::size_t n = cfg.n_agents;

  out.push_back(guarded("tiny_config", [&] {
    validate_tiny(cfg);
    return CheckResult{"tiny_config", true, "enumeration bound " + num(trajectory_count_bound(cfg))};
  }));
  if (!out.back().passed) return out;

  const PolicyParams theta = random_policy(cfg, rng, 0.8);
  const PolicyParams nu = random_policy(cfg, rng, 0.8);

  out.push_back(guarded("probability_mass", [&] {
    std::vector<ObservationPolicy> obs(n, params_policy(theta));
    CompensatedSum total;
    TrajectoryEnumerator(cfg).run(obs, [&](const Trajectory&, double p) { total.add(p); });
    const double err = std::abs(total.value() - 1.0);
    return CheckResult{"probability_mass", err <= opt.exact_tolerance, "|sum p - 1| = " + num(err)};
  }));

  out.push_back(guarded("monte_carlo_returns", [&] {
    const auto exact = exact_returns_shared(theta, cfg);
    const auto est = estimate_returns(rollout_shared(theta, cfg, opt.mc_episodes, rng));
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(est.g_shared[i] - exact[i]) / std::max(est.se_shared[i], 1e-300));
    return CheckResult{"monte_carlo_returns", worst <= 3.0, "max |G_mc - G| / se = " + num(worst)};
  }));

  out.push_back(guarded("weighted_decomposition", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto rho = random_policy(cfg, rng, 1.0);
      const auto th = random_policy(cfg, rng, 1.0);
      const auto kappa = random_simplex(n, rng);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += kappa[i] * exact_focal_return(rho, th, i, cfg);
      worst = std::max(worst, std::abs(exact_weighted_return(rho, th, kappa, cfg) - sum));
    }
    return CheckResult{"weighted_decomposition", worst <= opt.exact_tolerance, "20 trials, max error " + num(worst)};
  }));

  out.push_back(guarded("permutation_equivariance", [&] {
    // Lowest-index ties favor an index, so equivariance is checked with random ties.
    MarketConfig c = cfg;
    c.tie_break = TieBreak::random;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const auto g = exact_returns_shared(theta, c);
    double worst = 0.0;
    std::size_t count = 0;
    do {
      const auto pg = exact_returns_shared(permute(theta, perm), permute(c, perm));
      const auto expected = permute(g, perm);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(pg[i] - expected[i]));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return CheckResult{"permutation_equivariance", worst <= opt.exact_tolerance,
                       std::to_string(count) + " permutations, max error " + num(worst)};
  }));

  out.push_back(guarded("score_identity", [&] {
    double worst = 0.0;
    std::vector<ObservationPolicy> obs(n, params_policy(theta));
    TrajectoryEnumerator(cfg).run(obs, [&](const Trajectory& tr, double) {
      for (const auto& st : tr.states) {
        for (const auto& s : st.locals) {
          std::vector<double> acc(theta.values.size(), 0.0);
          const auto d = distribution(theta, s);
          for (std::size_t a = 0; a < d.probs.size(); ++a)
            accumulate_log_prob_grad(theta, s, static_cast<int>(a), d.probs[a], acc);
          worst = std::max(worst, l2_norm(acc));
        }
      }
    });
    return CheckResult{"score_identity", worst <= opt.score_tolerance, "max |sum_a pi grad ln pi| = " + num(worst)};
  }));

  const std::vector<double> lambda = [&] {
    std::vector<double> l(n);
    for (auto& x : l) x = 0.5 + rng.uniform();
    return l;
  }();
  const double lambda_bar = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  std::vector<double> kappa(n);
  for (std::size_t i = 0; i < n; ++i) kappa[i] = lambda[i] / lambda_bar;
  auto gradient_check = [&](const std::string& name, const std::vector<double>& estimate,
                            const std::vector<double>& truth) {
    const double err = relative_l2_error(estimate, truth);
    out.push_back({name, err < opt.gradient_tolerance,
                   "relative L2 error " + num(err) + " at " + std::to_string(opt.mc_episodes) + " episodes"});
  };
  auto safe = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("error: ") + e.what()});
    }
  };
  safe("gradient_L1", [&] {
    gradient_check("gradient_L1", grad_L1(rollout_shared(theta, cfg, opt.mc_episodes, rng), lambda, theta),
                   exact_grad_L1(theta, lambda, cfg));
  });
  safe("gradient_Ls_Lg_Lw", [&] {
    const auto batch = rollout_weighted(nu, theta, kappa, cfg, opt.mc_episodes, rng);
    gradient_check("gradient_Ls", grad_Ls(batch, lambda_bar, theta),
                   exact_grad_Ls(nu, theta, kappa, lambda_bar, cfg));
    gradient_check("gradient_Lg_prime", grad_Lg_prime(batch, lambda_bar, nu),
                   exact_grad_Lg_prime(nu, theta, kappa, lambda_bar, cfg));
    gradient_check("gradient_Lw_star", grad_Lw_star(batch, theta), exact_grad_Lw_star(nu, theta, kappa, cfg));
  });

  out.push_back(guarded("exact_best_response", [&] {
    std::vector<ObservationPolicy> obs(n, params_policy(theta));
    const auto g = exact_returns_shared(theta, cfg);
    std::string detail;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto br = exact_best_response(i, obs, cfg);
      auto with = obs;
      with[i] = table_policy(br.policy);
      const double achieved = exact_returns(std::span<const ObservationPolicy>(with), cfg)[i];
      ok = ok && br.value >= g[i] - opt.exact_tolerance && std::abs(achieved - br.value) <= opt.exact_tolerance;
      detail += (i ? "; " : "") + std::string("agent ") + std::to_string(i) + ": BR " + num(br.value) + " >= G " +
                num(g[i]) + " over " + std::to_string(br.observations) + " observations";
      if (br.observations <= 10) {
        const auto slow = exact_best_response_exhaustive(i, obs, cfg);
        ok = ok && std::abs(slow.value - br.value) <= opt.exact_tolerance;
        detail += ", exhaustive agrees";
      }
    }
    return CheckResult{"exact_best_response", ok, detail};
  }));

  out.push_back(guarded("trained_best_response", [&] {
    std::string detail;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = exact_best_response(i, theta, cfg).value;
      Rng br_rng = Rng::stream(opt.seed, 1 + i);
      const auto trained = train_best_response(i, theta, cfg, opt.br, br_rng, derive_key(opt.seed, 0xe7a1ULL));
      std::vector<PolicyParams> profile(n, theta);
      profile[i] = trained.policy;
      const double learned = exact_returns(std::span<const PolicyParams>(profile), cfg)[i];
      const double rel = std::abs(learned - exact) / std::max(std::abs(exact), 1e-12);
      ok = ok && rel <= opt.best_response_tolerance;
      detail += (i ? "; " : "") + std::string("agent ") + std::to_string(i) + ": trained " + num(learned) +
                " vs exact " + num(exact);
    }
    return CheckResult{"trained_best_response", ok, detail};
  }));
  return out;
}

}  // namespace ncb
