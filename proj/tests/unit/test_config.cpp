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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ncb/config.hpp"
#include "ncb/report.hpp"

namespace ncb {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(Config, MinimalConfigFillsDefaults) {
  const auto c = parse_config("[market]\nn_agents = 3\n[train]\nxi = 0.5\n");
  EXPECT_EQ(c.market.n_agents, 3u);
  EXPECT_EQ(c.market.budgets, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(c.market.base_values.size(), 3u);
  EXPECT_DOUBLE_EQ(c.train.xi, 0.5);
  EXPECT_EQ(c.train.alpha1, TrainConfig{}.alpha1);
  EXPECT_EQ(c.eval, BestResponseConfig{});
  EXPECT_EQ(c.method, Method::bpg);
}

TEST(Config, SingleBudgetIsBroadcast) {
  const auto c = parse_config("[market]\nn_agents = 4\nbudgets = 2.5\n");
  EXPECT_EQ(c.market.budgets, (std::vector<double>{2.5, 2.5, 2.5, 2.5}));
}

TEST(Config, BidLevelsMustIncrease) {
  const auto e = error_of("[market]\nbid_levels = 0, 1, 1\n");
  EXPECT_NE(e.find("market.bid_levels"), std::string::npos) << e;
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("[market]\n\nn_agents = two\n").find("test.ini:3:"), std::string::npos);
  EXPECT_NE(error_of("[market]\nhorizon 3\n").find("test.ini:2:"), std::string::npos);
}

TEST(Config, UnknownAndDuplicateKeysAreErrors) {
  EXPECT_NE(error_of("[market]\nn_agent = 2\n").find("unknown key 'n_agent'"), std::string::npos);
  EXPECT_NE(error_of("[markets]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("[train]\nxi = 1\nxi = 2\n").find("duplicate key 'train.xi'"), std::string::npos);
  EXPECT_NE(error_of("xi = 1\n").find("inside a section"), std::string::npos);
}

TEST(Config, VersionIsChecked) {
  EXPECT_NO_THROW(parse_config("version = 1\n[market]\nn_agents = 1\n"));
  EXPECT_NE(error_of("version = 2\n").find("unsupported config version"), std::string::npos);
}

TEST(Config, DistributionsAndEnums) {
  const auto c = parse_config(
      "[market]\nn_agents = 2\nvalue_noise = discrete 0.5:0.25 1.5:0.75\nbase_noise = uniform 0.9 1.1\n"
      "tie_break = random\n[experiment]\nmethod = bpg_zero\nepsilons = 0, 0.16\nseeds = 4, 5, 6\n");
  EXPECT_EQ(c.market.tie_break, TieBreak::random);
  EXPECT_EQ(c.method, Method::bpg_zero);
  EXPECT_EQ(c.epsilon_list, (std::vector<double>{0.0, 0.16}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
  EXPECT_NE(error_of("[market]\nvalue_noise = gaussian 0 1\n"), "");
  EXPECT_NE(error_of("[experiment]\nmethod = ppo\n"), "");
}

TEST(Config, ExperimentListsValidated) {
  EXPECT_NE(error_of("[experiment]\nseeds =\n"), "");
  EXPECT_NE(error_of("[experiment]\nepsilons = 1.5\n").find("experiment.epsilons"), std::string::npos);
}

TEST(Config, ResolvedTextIsAFixedPoint) {
  const auto c = parse_config(
      "[market]\nn_agents = 3\nbudgets = 1.1, 2.2, 3.3\nbase_values = 0.7, 1.0 , 1.3\nreserve_price = 0.15\n"
      "value_noise = uniform 0.5 1.5\n[train]\nalpha1 = 0.123456789\n[eval]\nbr_steps = 17\n");
  const std::string text = to_config_text(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_config_text(back), text);
}

TEST(Config, MissingFileNamesThePath) {
  try {
    load_config("/nonexistent/dir/ncb.ini");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/ncb.ini"), std::string::npos);
  }
}

TEST(Report, MeanStdIsSampleStd) {
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(mean_std({7.0}).std, 0.0);
}

TEST(Report, SummaryGroupsByMethodAndEpsilon) {
  std::vector<RunSummary> runs;
  for (double eps : {0.0, 0.08})
    for (std::uint64_t s = 0; s < 3; ++s) {
      RunSummary r;
      r.method = Method::bpg;
      r.epsilon = eps;
      r.seed = s;
      r.social_welfare = 10.0 + static_cast<double>(s);
      r.max_exploitability = eps / 2.0 + 0.03 * static_cast<double>(s);
      runs.push_back(r);
    }
  const auto rows = summarize(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].n_runs, 3u);
  EXPECT_DOUBLE_EQ(rows[0].social_welfare.mean, 11.0);
  EXPECT_DOUBLE_EQ(rows[1].compliance_rate, 2.0 / 3.0);
  const auto csv = summary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSummaryHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Report, RunSummaryJsonRoundTrip) {
  RunSummary r;
  r.method = Method::independent;
  r.epsilon = 0.16;
  r.seed = 9;
  r.social_welfare = 1.0 / 3.0;
  r.max_exploitability = 0.1;
  r.run_dir = "independent-e0.16-s9";
  const auto back = RunSummary::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(back.social_welfare, r.social_welfare);
}

}  // namespace
}  // namespace ncb
