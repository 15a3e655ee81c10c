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

#include <gtest/gtest.h>

#include "ncb/gradients.hpp"
#include "ncb/oracle.hpp"
#include "unit/test_support.hpp"

namespace ncb {
namespace {

using testing::relative_l2_error;
using testing::tiny_market;

// Exact expectation of one estimator's per-episode integrand (no baseline,
// or a fixed per-step baseline), by enumeration.
std::vector<double> exact_integrand(const PolicyParams& focal_policy, const PolicyParams& theta,
                                    std::span<const double> kappa, const PolicyParams& wrt, ScoreAgents who,
                                    const TargetSpec& spec, const MarketConfig& c,
                                    std::vector<double> fixed_baseline = {}) {
  std::vector<double> total(wrt.values.size(), 0.0);
  auto integrand = [&](const Trajectory& tr) {
    auto target = spec.evaluate(tr);
    for (std::size_t t = 0; t < fixed_baseline.size(); ++t) target[t] -= fixed_baseline[t];
    std::vector<double> g(wrt.values.size(), 0.0);
    accumulate_episode_score(tr, wrt, who, target, g);
    return g;
  };
  const auto th = params_policy(theta), fo = params_policy(focal_policy);
  if (kappa.empty()) {
    std::vector<ObservationPolicy> obs(c.n_agents, th);
    return exact_expectation(std::span<const ObservationPolicy>(obs), c, total.size(), integrand);
  }
  for (std::size_t i = 0; i < c.n_agents; ++i) {
    if (kappa[i] == 0.0) continue;
    std::vector<ObservationPolicy> obs(c.n_agents, th);
    obs[i] = fo;
    const auto g = exact_expectation(std::span<const ObservationPolicy>(obs), c, total.size(), integrand, i);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += kappa[i] * g[k];
  }
  return total;
}

struct GradientCase {
  MarketConfig c = tiny_market();
  PolicyParams theta = testing::random_policy(c, 101, 0.8);
  PolicyParams nu = testing::random_policy(c, 102, 0.8);
  std::vector<double> kappa{0.35, 0.65};
  std::vector<double> lambda{0.7, 1.3};
  double lambda_bar = 2.0;
};

TEST(GradientOracle, ExpectedScoreEstimatorsEqualFiniteDifferences) {
  GradientCase s;
  const auto fd_l1 = exact_grad_L1(s.theta, s.lambda, s.c);
  TargetSpec l1_spec{{1.7, 2.3}};
  const auto ex_l1 = exact_integrand(s.theta, s.theta, {}, s.theta, ScoreAgents::all, l1_spec, s.c);
  EXPECT_LT(relative_l2_error(ex_l1, fd_l1), 1e-6);

  const auto fd_ls = exact_grad_Ls(s.nu, s.theta, s.kappa, s.lambda_bar, s.c);
  auto ex_ls = exact_integrand(s.nu, s.theta, s.kappa, s.theta, ScoreAgents::non_focal, {}, s.c);
  for (auto& x : ex_ls) x *= s.lambda_bar;
  EXPECT_LT(relative_l2_error(ex_ls, fd_ls), 1e-6);

  const auto fd_lg = exact_grad_Lg_prime(s.nu, s.theta, s.kappa, s.lambda_bar, s.c);
  auto ex_lg = exact_integrand(s.nu, s.theta, s.kappa, s.nu, ScoreAgents::focal, {}, s.c);
  for (auto& x : ex_lg) x *= s.lambda_bar;
  EXPECT_LT(relative_l2_error(ex_lg, fd_lg), 1e-6);

  const auto fd_lw = exact_grad_Lw_star(s.nu, s.theta, s.kappa, s.c);
  const auto ex_lw = exact_integrand(s.nu, s.theta, s.kappa, s.theta, ScoreAgents::non_focal, {}, s.c);
  EXPECT_LT(relative_l2_error(ex_lw, fd_lw), 1e-6);
}

TEST(GradientOracle, FixedBaselineLeavesExpectationUnchanged) {
  GradientCase s;
  const std::vector<double> b{0.8, -0.4};
  TargetSpec l1_spec{{1.0, 1.0}};
  const auto plain = exact_integrand(s.theta, s.theta, {}, s.theta, ScoreAgents::all, l1_spec, s.c);
  const auto based = exact_integrand(s.theta, s.theta, {}, s.theta, ScoreAgents::all, l1_spec, s.c, b);
  for (std::size_t k = 0; k < plain.size(); ++k) EXPECT_NEAR(plain[k], based[k], 1e-12);
  const auto wplain = exact_integrand(s.nu, s.theta, s.kappa, s.nu, ScoreAgents::focal, {}, s.c);
  const auto wbased = exact_integrand(s.nu, s.theta, s.kappa, s.nu, ScoreAgents::focal, {}, s.c, b);
  for (std::size_t k = 0; k < wplain.size(); ++k) EXPECT_NEAR(wplain[k], wbased[k], 1e-12);
}

TEST(GradientOracle, DoublingWeightsDoublesExpectation) {
  GradientCase s;
  const auto g0 = exact_grad_L1(s.theta, std::vector<double>{0.0, 0.0}, s.c);
  const auto g1 = exact_grad_L1(s.theta, std::vector<double>{1.0, 1.0}, s.c);
  for (std::size_t k = 0; k < g0.size(); ++k) EXPECT_NEAR(g1[k], 2.0 * g0[k], 1e-9);
  Rng rng(3);
  const auto batch = rollout_shared(s.theta, s.c, 2000, rng);
  const auto e0 = grad_L1(batch, std::vector<double>{0.0, 0.0}, s.theta);
  const auto e1 = grad_L1(batch, std::vector<double>{1.0, 1.0}, s.theta);
  for (std::size_t k = 0; k < e0.size(); ++k) EXPECT_NEAR(e1[k], 2.0 * e0[k], 1e-12);
}

TEST(GradientOracle, LwStarAtThetaEqualsScaledLs) {
  GradientCase s;
  const std::vector<double> uniform{0.5, 0.5};
  const auto lw = exact_grad_Lw_star(s.theta, s.theta, uniform, s.c);
  const auto ls = exact_grad_Ls(s.theta, s.theta, uniform, s.lambda_bar, s.c);
  for (std::size_t k = 0; k < lw.size(); ++k) EXPECT_NEAR(lw[k], ls[k] / s.lambda_bar, 1e-12);
  Rng rng(4);
  const auto batch = rollout_weighted(s.theta, s.theta, uniform, s.c, 1000, rng);
  const auto elw = grad_Lw_star(batch, s.theta);
  const auto els = grad_Ls(batch, s.lambda_bar, s.theta);
  for (std::size_t k = 0; k < elw.size(); ++k) EXPECT_NEAR(elw[k], els[k] / s.lambda_bar, 1e-12);
}

// Monte-Carlo estimates against the finite-difference oracle.

TEST(GradientEstimators, L1MatchesOracle) {
  GradientCase s;
  const auto fd = exact_grad_L1(s.theta, s.lambda, s.c);
  Rng rng(11);
  const auto batch = rollout_shared(s.theta, s.c, 100000, rng);
  EXPECT_LT(relative_l2_error(grad_L1(batch, s.lambda, s.theta), fd), 0.05);
}

TEST(GradientEstimators, LsMatchesOracle) {
  GradientCase s;
  const auto fd = exact_grad_Ls(s.nu, s.theta, s.kappa, s.lambda_bar, s.c);
  Rng rng(12);
  const auto batch = rollout_weighted(s.nu, s.theta, s.kappa, s.c, 100000, rng);
  EXPECT_LT(relative_l2_error(grad_Ls(batch, s.lambda_bar, s.theta), fd), 0.05);
}

TEST(GradientEstimators, LgPrimeMatchesOracle) {
  GradientCase s;
  const auto fd = exact_grad_Lg_prime(s.nu, s.theta, s.kappa, s.lambda_bar, s.c);
  Rng rng(13);
  const auto batch = rollout_weighted(s.nu, s.theta, s.kappa, s.c, 100000, rng);
  EXPECT_LT(relative_l2_error(grad_Lg_prime(batch, s.lambda_bar, s.nu), fd), 0.05);
}

TEST(GradientEstimators, LwStarMatchesOracle) {
  GradientCase s;
  const auto fd = exact_grad_Lw_star(s.nu, s.theta, s.kappa, s.c);
  Rng rng(14);
  const auto batch = rollout_weighted(s.nu, s.theta, s.kappa, s.c, 100000, rng);
  EXPECT_LT(relative_l2_error(grad_Lw_star(batch, s.theta), fd), 0.05);
}

TEST(GradientEstimators, SingleAgentReinforceWithinTwoPercent) {
  MarketConfig c = tiny_market();
  c.n_agents = 1;
  c.horizon = 1;
  c.budgets = {2.0};
  c.base_values = {1.0};
  c.reserve_price = 0.5;
  const auto theta = testing::random_policy(c, 15, 0.5);
  const auto fd = exact_grad_L1(theta, std::vector<double>{0.0}, c);
  Rng rng(16);
  const auto batch = rollout_shared(theta, c, 200000, rng);
  EXPECT_LT(relative_l2_error(grad_L1(batch, std::vector<double>{0.0}, theta), fd), 0.02);
}

TEST(GradientEstimators, NegativeLambdaRejected) {
  GradientCase s;
  Rng rng(17);
  const auto batch = rollout_shared(s.theta, s.c, 10, rng);
  EXPECT_THROW(grad_L1(batch, std::vector<double>{-0.1, 0.0}, s.theta), std::invalid_argument);
  EXPECT_THROW(grad_L1(batch, std::vector<double>{0.0}, s.theta), std::invalid_argument);
}

TEST(GradientEstimators, ZeroRewardsGiveZeroGradient) {
  GradientCase s;
  s.c.reserve_price = 100.0;  // nobody ever qualifies
  Rng rng(18);
  const auto batch = rollout_shared(s.theta, s.c, 200, rng);
  for (double g : grad_L1(batch, s.lambda, s.theta)) EXPECT_EQ(g, 0.0);
}

TEST(GradientEstimators, ZeroLambdaBarGivesZeros) {
  GradientCase s;
  Rng rng(19);
  const auto batch = rollout_weighted(s.nu, s.theta, s.kappa, s.c, 200, rng);
  for (double g : grad_Ls(batch, 0.0, s.theta)) EXPECT_EQ(g, 0.0);
  for (double g : grad_Lg_prime(batch, 0.0, s.nu)) EXPECT_EQ(g, 0.0);
}

TEST(GradientEstimators, SingleAgentHasNoCompetitiveTerms) {
  MarketConfig c = tiny_market();
  c.n_agents = 1;
  c.budgets = {1.5};
  c.base_values = {1.0};
  const auto theta = testing::random_policy(c, 20), nu = testing::random_policy(c, 21);
  Rng rng(22);
  const auto batch = rollout_weighted(nu, theta, std::vector<double>{1.0}, c, 200, rng);
  for (double g : grad_Ls(batch, 1.5, theta)) EXPECT_EQ(g, 0.0);
  for (double g : grad_Lw_star(batch, theta)) EXPECT_EQ(g, 0.0);
}

TEST(GradientEstimators, DegenerateNuWithZeroRewardsGivesZero) {
  GradientCase s;
  s.c.reserve_price = 100.0;
  auto nu = PolicyParams::zeros(s.theta.arch);
  nu.weight(0, 3) = 1000.0;
  Rng rng(23);
  const auto batch = rollout_weighted(nu, s.theta, s.kappa, s.c, 200, rng);
  for (double g : grad_Lg_prime(batch, 1.0, nu)) EXPECT_EQ(g, 0.0);
}

TEST(GradientEstimators, FocalAnnotationsRequired) {
  GradientCase s;
  Rng rng(24);
  const auto batch = rollout_shared(s.theta, s.c, 10, rng);
  EXPECT_THROW(grad_Ls(batch, 1.0, s.theta), std::invalid_argument);
  EXPECT_THROW(grad_Lg_prime(batch, 1.0, s.nu), std::invalid_argument);
  EXPECT_THROW(grad_Lw_star(batch, s.theta), std::invalid_argument);
}

TEST(Assemble, ZeroLambdaBarPath) {
  const std::vector<double> l1{3}, ls{5}, lg{7}, lw{9};
  const auto d = assemble(l1, ls, lg, lw, 1.0, 0.0);
  EXPECT_EQ(d.delta_theta, std::vector<double>{-3});
  EXPECT_EQ(d.delta_nu, std::vector<double>{0});
}

TEST(Assemble, XiEqualLambdaBarCancelsCompetitiveTerms) {
  const std::vector<double> l1{3, -1}, ls{5, 2}, lg{7, 1}, lw{9, 4};
  const auto d = assemble(l1, ls, lg, lw, 2.5, 2.5);
  EXPECT_EQ(d.delta_theta, (std::vector<double>{2.5 * 9 - 3, 2.5 * 4 + 1}));
  EXPECT_EQ(d.delta_nu, (std::vector<double>{0, 0}));
}

TEST(Assemble, DirectEvaluation) {
  const std::vector<double> l1{3}, ls{2}, lg{4}, lw{1};
  const auto d = assemble(l1, ls, lg, lw, 2.0, 4.0);
  EXPECT_EQ(d.delta_theta, std::vector<double>{0});
  EXPECT_EQ(d.delta_nu, std::vector<double>{2});
}

TEST(Assemble, NegativeFactorIsKeptUnlessClamped) {
  const std::vector<double> l1{0}, ls{1}, lg{1}, lw{0};
  EXPECT_EQ(assemble(l1, ls, lg, lw, 2.0, 1.0).delta_theta, std::vector<double>{-1});
  EXPECT_EQ(assemble(l1, ls, lg, lw, 2.0, 1.0, true).delta_theta, std::vector<double>{0});
}

TEST(Assemble, MismatchedLengthsRejected) {
  const std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(assemble(a, b, a, a, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(assemble(a, a, a, b, 1.0, 1.0), std::invalid_argument);
}

TEST(Adam, AscendsAQuadratic) {
  std::vector<double> x{3.0, -2.0};
  Adam opt;
  opt.lr = 0.1;
  for (int k = 0; k < 500; ++k) {
    const std::vector<double> g{-2 * (x[0] - 1.0), -2 * (x[1] + 0.5)};
    opt.ascend(x, g);
  }
  EXPECT_NEAR(x[0], 1.0, 1e-2);
  EXPECT_NEAR(x[1], -0.5, 1e-2);
}

}  // namespace
}  // namespace ncb
