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

// Bi-level policy gradient training loop.
//
// One outer iteration:
//   1. train the unified solution x* = argmax_x G_w(x; theta) under kappa
//   2. dual:   lambda_i = [G_i(x*; theta) - G_i(theta) - eps]_+
//              kappa_i = lambda_i / lambda_bar (uniform when lambda_bar = 0)
//   3. primal: theta  <- theta  - alpha1 * delta_theta
//              nu_bar <- nu_bar - alpha2 * delta_nu
// with the directions assembled in gradients.hpp. eps is a fraction of the
// current social welfare unless raw mode is selected.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ncb/gradients.hpp"
#include "ncb/market.hpp"
#include "ncb/policy.hpp"
#include "ncb/rollout.hpp"

namespace ncb {

struct DualState {
  std::vector<double> lambdas;
  double lambda_bar = 0.0;
  std::vector<double> kappas;
  double epsilon_norm = 0.0;
  bool degenerate = true;  // lambda_bar == 0; kappas hold the uniform fallback

  static DualState initial(std::size_t n_agents, double epsilon_norm = 0.0) {
    DualState d;
    d.lambdas.assign(n_agents, 0.0);
    d.kappas.assign(n_agents, 1.0 / static_cast<double>(n_agents));
    d.epsilon_norm = epsilon_norm;
    return d;
  }
};

namespace detail {
inline void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k])) throw std::invalid_argument(std::string(what) + ": non-finite entry at index " + std::to_string(k));
}
}  // namespace detail

/// Dual step with an absolute threshold.
inline DualState dual_update_raw(std::span<const double> g_xstar, std::span<const double> g_theta,
                                 double epsilon_raw) {
  if (g_xstar.size() != g_theta.size() || g_theta.empty())
    throw std::invalid_argument("dual_update: return vectors must have equal non-zero length");
  detail::require_finite(g_xstar, "dual_update g_xstar");
  detail::require_finite(g_theta, "dual_update g_theta");
  if (!std::isfinite(epsilon_raw)) throw std::invalid_argument("dual_update: non-finite epsilon");
  const std::size_t n = g_theta.size();
  DualState d;
  d.lambdas.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.lambdas[i] = std::max(g_xstar[i] - g_theta[i] - epsilon_raw, 0.0);
  d.lambda_bar = std::accumulate(d.lambdas.begin(), d.lambdas.end(), 0.0);
  d.kappas.resize(n);
  d.degenerate = !(d.lambda_bar > 0.0);
  for (std::size_t i = 0; i < n; ++i)
    d.kappas[i] = d.degenerate ? 1.0 / static_cast<double>(n) : d.lambdas[i] / d.lambda_bar;
  return d;
}

/// Dual step with eps = epsilon_norm * social_welfare.
inline DualState dual_update(std::span<const double> g_xstar, std::span<const double> g_theta, double epsilon_norm,
                             double social_welfare) {
  if (!std::isfinite(social_welfare) || !std::isfinite(epsilon_norm))
    throw std::invalid_argument("dual_update: non-finite input");
  if (!(social_welfare > 0.0)) throw std::domain_error("dual_update: social welfare must be > 0");
  DualState d = dual_update_raw(g_xstar, g_theta, epsilon_norm * social_welfare);
  d.epsilon_norm = epsilon_norm;
  return d;
}

/// theta' = theta - alpha1 * delta_theta, nu' = nu - alpha2 * delta_nu.
inline std::pair<PolicyParams, PolicyParams> primal_update(const PolicyParams& theta, const PolicyParams& nu_bar,
                                                           const GradientBundle& bundle, double alpha1,
                                                           double alpha2) {
  if (bundle.delta_theta.size() != theta.values.size() || bundle.delta_nu.size() != nu_bar.values.size())
    throw std::invalid_argument("primal_update: direction lengths do not match the parameters");
  detail::require_finite(bundle.delta_theta, "primal_update delta_theta");
  detail::require_finite(bundle.delta_nu, "primal_update delta_nu");
  std::pair<PolicyParams, PolicyParams> out{theta, nu_bar};
  for (std::size_t k = 0; k < theta.values.size(); ++k) out.first.values[k] -= alpha1 * bundle.delta_theta[k];
  for (std::size_t k = 0; k < nu_bar.values.size(); ++k) out.second.values[k] -= alpha2 * bundle.delta_nu[k];
  return out;
}

struct TrainConfig {
  double xi = 1.0;
  double alpha1 = 0.05;
  double alpha2 = 0.05;
  std::size_t unified_train_iters = 10;
  double unified_lr = 0.05;
  std::size_t unified_episodes = 128;
  std::size_t episodes_per_estimate = 256;
  std::size_t eval_episodes = 1024;
  std::size_t max_outer_iters = 100;
  std::size_t convergence_window = 10;
  double convergence_tol = 1e-3;
  std::uint64_t seed = 0;
  double epsilon = 0.08;
  bool epsilon_normalized = true;
  std::size_t embed_dim = 4;
  double init_scale = 0.1;
  bool baseline = true;
  bool clamp_competitive_factor = false;
  bool cold_start_unified = false;
  std::size_t bpg_zero_br_steps = 200;
  std::size_t independent_rounds = 4;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& what) {
      throw std::invalid_argument("train." + field + ": " + what);
    };
    auto positive = [&](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v)) fail(field, "must be > 0");
    };
    positive(xi, "xi");
    positive(alpha1, "alpha1");
    positive(alpha2, "alpha2");
    positive(unified_lr, "unified_lr");
    positive(convergence_tol, "convergence_tol");
    if (unified_episodes < 1) fail("unified_episodes", "must be >= 1");
    if (episodes_per_estimate < 1) fail("episodes_per_estimate", "must be >= 1");
    if (eval_episodes < 1) fail("eval_episodes", "must be >= 1");
    if (convergence_window < 1) fail("convergence_window", "must be >= 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon", "must be finite and >= 0");
    if (epsilon_normalized && epsilon > 1.0) fail("epsilon", "normalized epsilon must lie in [0, 1]");
    if (embed_dim > kMaxEmbedDim) fail("embed_dim", "must be <= " + std::to_string(kMaxEmbedDim));
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) fail("init_scale", "must be finite and >= 0");
  }

  bool operator==(const TrainConfig&) const = default;
};

struct IterationRecord {
  std::size_t iter = 0;
  double social_welfare = 0.0;
  std::vector<double> g_theta;
  std::vector<double> g_xstar;  // empty for methods without a unified solution
  std::vector<double> lambdas;
  double lambda_bar = 0.0;
  std::vector<double> kappas;
  double grad_norm_theta = 0.0;
  double grad_norm_nu = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json() const {
    return {{"iter", iter},
            {"sw", social_welfare},
            {"lambda_bar", lambda_bar},
            {"lambdas", lambdas},
            {"kappas", kappas},
            {"g_theta", g_theta},
            {"g_xstar", g_xstar},
            {"grad_norm_theta", grad_norm_theta},
            {"grad_norm_nu", grad_norm_nu},
            {"wall_ms", wall_ms}};
  }

  static IterationRecord from_json(const nlohmann::json& j) {
    IterationRecord r;
    r.iter = j.at("iter").get<std::size_t>();
    r.social_welfare = j.at("sw").get<double>();
    r.lambda_bar = j.at("lambda_bar").get<double>();
    r.lambdas = j.at("lambdas").get<std::vector<double>>();
    r.kappas = j.value("kappas", std::vector<double>{});
    r.g_theta = j.at("g_theta").get<std::vector<double>>();
    r.g_xstar = j.at("g_xstar").get<std::vector<double>>();
    r.grad_norm_theta = j.at("grad_norm_theta").get<double>();
    r.grad_norm_nu = j.at("grad_norm_nu").get<double>();
    r.wall_ms = j.at("wall_ms").get<double>();
    return r;
  }
};

inline void write_history_jsonl(const std::filesystem::path& path, std::span<const IterationRecord> history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : history) f << r.to_json().dump() << '\n';
}

inline std::vector<IterationRecord> read_history_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::vector<IterationRecord> out;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.push_back(IterationRecord::from_json(nlohmann::json::parse(line)));
  return out;
}

/// True when, over the last `window` iterations, every step changed both the
/// social welfare and lambda_bar by less than `tol` relative to the previous
/// value. A quantity that stays at zero counts as unchanged.
inline bool converged(std::span<const IterationRecord> history, std::size_t window, double tol) {
  if (window == 0 || history.size() < window + 1) return false;
  auto rel = [](double now, double before) {
    const double d = std::abs(now - before);
    if (d == 0.0) return 0.0;
    return d / std::max(std::abs(before), std::numeric_limits<double>::min());
  };
  for (std::size_t k = history.size() - window; k < history.size(); ++k) {
    if (rel(history[k].social_welfare, history[k - 1].social_welfare) >= tol) return false;
    if (rel(history[k].lambda_bar, history[k - 1].lambda_bar) >= tol) return false;
  }
  return true;
}

struct UnifiedSolution {
  PolicyParams x_star;
  double g_w_star = 0.0;
};

/// Policy-gradient ascent (Adam) on G_w(x; theta) from `warm_start`, then an
/// estimate of G_w(x*; theta) on a fresh weighted batch.
inline UnifiedSolution train_unified_solution(const PolicyParams& theta, std::span<const double> kappa,
                                              const MarketConfig& env, const TrainConfig& cfg, Rng& rng,
                                              const PolicyParams& warm_start) {
  check_simplex(kappa, env.n_agents);
  UnifiedSolution out{warm_start, 0.0};
  Adam opt;
  opt.lr = cfg.unified_lr;
  for (std::size_t k = 0; k < cfg.unified_train_iters; ++k) {
    const auto batch = rollout_weighted(out.x_star, theta, kappa, env, cfg.unified_episodes, rng);
    const auto g = focal_policy_gradient(batch, out.x_star, {cfg.baseline});
    opt.ascend(out.x_star.values, g);
  }
  out.g_w_star =
      estimate_returns(rollout_weighted(out.x_star, theta, kappa, env, cfg.episodes_per_estimate, rng)).g_weighted;
  return out;
}

struct TrainResult {
  PolicyParams theta;
  PolicyParams nu_bar;
  PolicyParams x_star;
  std::vector<IterationRecord> history;
  DualState dual;
  bool converged = false;
};

struct TrainObserver {
  std::function<void(const IterationRecord&)> on_iteration;
  bool record_wall_time = true;
};

namespace detail {
inline double elapsed_ms(std::chrono::steady_clock::time_point t0, bool record) {
  if (!record) return 0.0;
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// G_i(rho; theta) for every i from one focal batch per agent.
inline std::vector<double> focal_returns(const PolicyParams& rho, const PolicyParams& theta, const MarketConfig& env,
                                         std::size_t episodes, Rng& rng) {
  std::vector<double> g(env.n_agents);
  for (std::size_t i = 0; i < env.n_agents; ++i)
    g[i] = estimate_returns(rollout_focal(rho, theta, i, env, episodes, rng)).g_focal[i];
  return g;
}

inline DualState dual_step(std::span<const double> g_dev, std::span<const double> g_theta, double sw,
                           const TrainConfig& cfg) {
  return cfg.epsilon_normalized ? dual_update(g_dev, g_theta, cfg.epsilon, sw)
                                : dual_update_raw(g_dev, g_theta, cfg.epsilon);
}

inline void finish_iteration(TrainResult& res, IterationRecord rec, const TrainConfig& cfg,
                             const TrainObserver& obs) {
  if (obs.on_iteration) obs.on_iteration(rec);
  res.history.push_back(std::move(rec));
  res.converged = converged(res.history, cfg.convergence_window, cfg.convergence_tol);
}
}  // namespace detail

inline PolicyParams initial_policy(const MarketConfig& env, const TrainConfig& cfg, Rng& rng) {
  return PolicyParams::random(arch_for(env, cfg.embed_dim), rng, cfg.init_scale);
}

/// Runs the outer loop until max_outer_iters or convergence.
inline TrainResult bpg_train(const MarketConfig& env, const TrainConfig& cfg, const TrainObserver& obs = {}) {
  env.validate();
  cfg.validate();
  Rng rng(cfg.seed);
  TrainResult res;
  res.theta = initial_policy(env, cfg, rng);
  res.nu_bar = res.theta;
  res.x_star = res.theta;
  res.dual = DualState::initial(env.n_agents, cfg.epsilon);

  for (std::size_t it = 0; it < cfg.max_outer_iters && !res.converged; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const PolicyParams warm = cfg.cold_start_unified ? initial_policy(env, cfg, rng) : res.x_star;
    auto unified = train_unified_solution(res.theta, res.dual.kappas, env, cfg, rng, warm);
    res.x_star = std::move(unified.x_star);

    const auto shared = rollout_shared(res.theta, env, cfg.episodes_per_estimate, rng);
    const auto g_theta = estimate_returns(shared).g_shared;
    const double sw = std::accumulate(g_theta.begin(), g_theta.end(), 0.0);
    const auto g_xstar = detail::focal_returns(res.x_star, res.theta, env, cfg.episodes_per_estimate, rng);
    res.dual = detail::dual_step(g_xstar, g_theta, sw, cfg);

    GradientBundle b;
    b.xi = cfg.xi;
    b.lambda_bar = res.dual.lambda_bar;
    const EstimatorOptions eo{cfg.baseline};
    b.l1 = grad_L1(shared, res.dual.lambdas, res.theta, eo);
    if (res.dual.lambda_bar > 0.0) {
      const auto wb_nu = rollout_weighted(res.nu_bar, res.theta, res.dual.kappas, env, cfg.episodes_per_estimate, rng);
      b.ls = grad_Ls(wb_nu, b.lambda_bar, res.theta, eo);
      b.lg_prime = grad_Lg_prime(wb_nu, b.lambda_bar, res.nu_bar, eo);
      const auto wb_x = rollout_weighted(res.x_star, res.theta, res.dual.kappas, env, cfg.episodes_per_estimate, rng);
      b.lw_star = grad_Lw_star(wb_x, res.theta, eo);
    } else {
      b.ls.assign(res.theta.values.size(), 0.0);
      b.lg_prime.assign(res.nu_bar.values.size(), 0.0);
      b.lw_star.assign(res.theta.values.size(), 0.0);
    }
    assemble(b, cfg.clamp_competitive_factor);
    std::tie(res.theta, res.nu_bar) = primal_update(res.theta, res.nu_bar, b, cfg.alpha1, cfg.alpha2);

    IterationRecord rec;
    rec.iter = it;
    rec.social_welfare = sw;
    rec.g_theta = g_theta;
    rec.g_xstar = g_xstar;
    rec.lambdas = res.dual.lambdas;
    rec.lambda_bar = res.dual.lambda_bar;
    rec.kappas = res.dual.kappas;
    rec.grad_norm_theta = l2_norm(b.delta_theta);
    rec.grad_norm_nu = l2_norm(b.delta_nu);
    rec.wall_ms = detail::elapsed_ms(t0, obs.record_wall_time);
    detail::finish_iteration(res, std::move(rec), cfg, obs);
  }
  return res;
}

/// Writes theta.ncbp, nu_bar.ncbp and x_star.ncbp into `dir`.
inline void save_train_checkpoints(const TrainResult& res, const std::filesystem::path& dir) {
  save_checkpoint(res.theta, dir / "theta.ncbp");
  save_checkpoint(res.nu_bar, dir / "nu_bar.ncbp");
  save_checkpoint(res.x_star, dir / "x_star.ncbp");
}

}  // namespace ncb
