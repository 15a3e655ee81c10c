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

#include <filesystem>

#include "ncb/policy.hpp"
#include "unit/test_support.hpp"

namespace ncb {
namespace {

using testing::sample_local_state;
using testing::tiny_market;

TEST(Policy, ZeroParamsAreUniform) {
  const auto c = tiny_market();
  const auto p = PolicyParams::zeros(arch_for(c, 3));
  Rng rng(1);
  const auto d = distribution(p, sample_local_state(c, rng));
  for (double q : d.probs) EXPECT_DOUBLE_EQ(q, 1.0 / 3.0);
}

TEST(Policy, CommonRowShiftLeavesDistributionUnchanged) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 2);
  PolicyParams q = p;
  const std::size_t D = p.arch.input_dim();
  Rng rng(3);
  std::vector<double> shift(D);
  for (auto& x : shift) x = rng.uniform(-2.0, 2.0);
  for (std::size_t k = 0; k < p.arch.n_actions; ++k)
    for (std::size_t d = 0; d < D; ++d) q.weight(k, d) += shift[d];
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = sample_local_state(c, rng);
    const auto a = distribution(p, s), b = distribution(q, s);
    for (std::size_t k = 0; k < a.probs.size(); ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-12);
  }
}

TEST(Policy, IdenticalAgentsActIdentically) {
  const auto c = tiny_market();
  auto p = testing::random_policy(c, 4);
  auto e0 = p.embedding(0), e1 = p.embedding(1);
  std::copy(e0.begin(), e0.end(), e1.begin());
  Rng rng(5);
  auto s0 = sample_local_state(c, rng);
  s0.agent_index = 0;
  auto s1 = s0;
  s1.agent_index = 1;
  EXPECT_EQ(distribution(p, s0).probs, distribution(p, s1).probs);
}

TEST(Policy, ProbabilitiesNormalized) {
  const auto c = tiny_market();
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = testing::random_policy(c, 100 + trial, 3.0);
    const auto d = distribution(p, sample_local_state(c, rng));
    double sum = 0.0;
    for (double q : d.probs) {
      EXPECT_GE(q, 0.0);
      sum += q;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Policy, DegenerateDistributionAlwaysPicksSameAction) {
  const auto c = tiny_market();
  auto p = PolicyParams::zeros(arch_for(c, 1));
  p.weight(0, 3) = 1000.0;  // context_1 is positive for every agent
  Rng rng(7);
  const auto s = sample_local_state(c, rng);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_action(p, s, rng), 0);
}

TEST(Policy, UniformSamplingFrequencies) {
  const auto c = tiny_market();
  const auto p = PolicyParams::zeros(arch_for(c, 1));
  Rng rng(8);
  const auto s = sample_local_state(c, rng);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int k = 0; k < n; ++k) ++counts[sample_action(p, s, rng)];
  const double q = 1.0 / 3.0, sigma = std::sqrt(n * q * (1 - q));
  for (int cnt : counts) EXPECT_LT(std::abs(cnt - n * q), 3 * sigma);
}

TEST(Policy, SamplingReproducibleFromSeed) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 9);
  Rng r0(10);
  const auto s = sample_local_state(c, r0);
  Rng a(42), b(42);
  for (int k = 0; k < 200; ++k) EXPECT_EQ(sample_action(p, s, a), sample_action(p, s, b));
}

TEST(Policy, LogitScoreAtUniformTwoActions) {
  MarketConfig c = tiny_market();
  c.bid_levels = {0.0, 1.0};
  const auto p = PolicyParams::zeros(arch_for(c, 1));
  Rng rng(11);
  const auto g = logit_score(p, sample_local_state(c, rng), 0);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
}

TEST(Policy, ScoreIdentityByFullSummation) {
  const auto c = tiny_market();
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testing::random_policy(c, 200 + trial, 2.0);
    const auto s = sample_local_state(c, rng);
    const auto d = distribution(p, s);
    std::vector<double> total(p.values.size(), 0.0);
    for (std::size_t a = 0; a < d.probs.size(); ++a)
      accumulate_log_prob_grad(p, s, static_cast<int>(a), d.probs[a], total);
    for (double x : total) EXPECT_LT(std::abs(x), 1e-10);
  }
}

TEST(Policy, ScoreMatchesFiniteDifferences) {
  const auto c = tiny_market();
  Rng rng(13);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = testing::random_policy(c, 300 + trial, 1.0);
    const auto s = sample_local_state(c, rng);
    const int a = static_cast<int>(rng.below(c.n_actions()));
    const auto g = log_prob_grad(p, s, a);
    std::vector<double> fd(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = p.values[k];
      p.values[k] = x + h;
      const double up = log_prob(p, s, a);
      p.values[k] = x - h;
      const double down = log_prob(p, s, a);
      p.values[k] = x;
      fd[k] = (up - down) / (2 * h);
      EXPECT_NEAR(fd[k], g[k], 1e-6);
    }
    EXPECT_LT(testing::relative_l2_error(g, fd), 1e-5);
  }
}

TEST(Policy, RejectsUnknownAgentIndex) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 14);
  Rng rng(15);
  auto s = sample_local_state(c, rng);
  s.agent_index = 5;
  EXPECT_THROW(distribution(p, s), std::out_of_range);
}

TEST(Checkpoint, EncodeDecodeIsByteExact) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 16, 3.0, 4);
  const std::string bytes = encode_checkpoint(p);
  EXPECT_EQ(bytes.substr(0, 4), "NCBP");
  EXPECT_EQ(bytes.size(), 4 + 5 * 4 + 8 * p.values.size());
  const auto q = decode_checkpoint(bytes);
  EXPECT_EQ(p, q);
  EXPECT_EQ(encode_checkpoint(q), bytes);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 17);
  const auto path = std::filesystem::temp_directory_path() / "ncb_policy_roundtrip.ncbp";
  save_checkpoint(p, path);
  const auto q = load_checkpoint(path);
  EXPECT_EQ(p, q);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto c = tiny_market();
  const auto p = testing::random_policy(c, 18);
  std::string bytes = encode_checkpoint(p);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), std::runtime_error);
}

}  // namespace
}  // namespace ncb
