// Copyright 2026 The fdbreak Authors
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

#include "fdbreak/diagnostics.h"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles/oracles.h"

namespace fdbreak {
namespace {

using Chains = std::vector<std::vector<double>>;

TEST(GelmanRubin, IdenticalChainsOfLength100) {
  std::vector<double> c(100);
  oracle::Rng rng(1);
  for (double& v : c) v = rng.normal();
  const Chains chains = {c, c};
  EXPECT_NEAR(gelman_rubin(chains), std::sqrt(99.0 / 100.0), 1e-12);
}

TEST(GelmanRubin, ShortIdenticalChains) {
  const Chains chains = {{1, 2, 3}, {1, 2, 3}};
  EXPECT_NEAR(gelman_rubin(chains), std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(gelman_rubin(chains), 0.816497, 1e-6);
}

TEST(GelmanRubin, SeparatedChainsMatchHandEvaluation) {
  const Chains chains = {{0, 0.1, -0.1}, {10, 10.1, 9.9}};
  // W = 0.01; chain means 0 and 10 give B/n = 50; n = 3.
  const double hand = std::sqrt((2.0 / 3.0 * 0.01 + 50.0) / 0.01);
  EXPECT_NEAR(gelman_rubin(chains), hand, 1e-9);
  EXPECT_NEAR(gelman_rubin(chains), 70.7153920067383, 1e-9);
}

TEST(GelmanRubin, UnavailableCases) {
  const Chains one = {{1, 2, 3}};
  EXPECT_THROW(gelman_rubin(one), DiagnosticUnavailable);
  const Chains flat = {{1, 1, 1}, {2, 2, 2}};
  EXPECT_THROW(gelman_rubin(flat), DiagnosticUnavailable);
  const Chains ragged = {{1, 2, 3}, {1, 2}};
  EXPECT_THROW(gelman_rubin(ragged), DiagnosticUnavailable);
}

TEST(Hdi, TieBreakPicksLowestStart) {
  const std::vector<double> s = {2, -1, 0, -2, 1};
  const Interval h = hdi(s, 0.6);
  EXPECT_EQ(h.low, -2.0);
  EXPECT_EQ(h.high, 0.0);
}

TEST(Hdi, ConstantSamples) {
  const std::vector<double> s(50, 3.25);
  const Interval h = hdi(s, 0.95);
  EXPECT_EQ(h.low, 3.25);
  EXPECT_EQ(h.high, 3.25);
}

TEST(Hdi, SymmetricUnimodalMatchesEqualTailed) {
  oracle::Rng rng(2);
  std::vector<double> s(10000);
  for (double& v : s) v = rng.normal();
  const Interval h = hdi(s, 0.95);
  const double lo = oracle::percentile(s, 0.025);
  const double hi = oracle::percentile(s, 0.975);
  // Sampling noise of the 2.5% quantile of 10,000 normals is about 0.03.
  EXPECT_NEAR(h.low, lo, 0.1);
  EXPECT_NEAR(h.high, hi, 0.1);
}

TEST(Hdi, RejectsBadInput) {
  const std::vector<double> empty;
  EXPECT_THROW(hdi(empty, 0.9), std::invalid_argument);
  const std::vector<double> s = {1, 2};
  EXPECT_THROW(hdi(s, 0.0), std::invalid_argument);
  EXPECT_THROW(hdi(s, 1.0), std::invalid_argument);
}

TEST(Hdi, MatchesBruteForceOnRandomInputs) {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(1, 200);
    std::vector<double> s(n);
    for (double& v : s) v = std::exp(rng.normal());  // skewed
    if (trial % 5 == 0) {
      for (double& v : s) v = static_cast<double>(rng.integer(0, 6));  // ties
    }
    const double mass = rng.uniform(0.05, 0.99);
    const Interval h = hdi(s, mass);
    const auto expected = oracle::brute_force_hdi(s, mass);
    EXPECT_EQ(h.low, expected.first);
    EXPECT_EQ(h.high, expected.second);
  }
}

TEST(Summarize, FiveIntegers) {
  const Chains chains = {{1, 2, 3, 4, 5}};
  const ParameterSummary s = summarize(chains, 0.95, "x");
  EXPECT_EQ(s.name, "x");
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.std, std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(s.std, 1.5811, 1e-4);
  EXPECT_FALSE(s.rhat.has_value());
}

TEST(Summarize, ConstantDraws) {
  const Chains chains = {std::vector<double>(20, 7.0), std::vector<double>(20, 7.0)};
  const ParameterSummary s = summarize(chains, 0.95);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.ci_low, 7.0);
  EXPECT_EQ(s.ci_high, 7.0);
  EXPECT_EQ(s.hdi_low, 7.0);
  EXPECT_EQ(s.hdi_high, 7.0);
}

TEST(Summarize, MatchesNaiveOracleOnThousandDraws) {
  oracle::Rng rng(4);
  Chains chains(4, std::vector<double>(250));
  std::vector<double> all;
  for (auto& c : chains) {
    for (double& v : c) {
      v = 3.0 + 2.0 * rng.normal() + std::exp(rng.normal());
      all.push_back(v);
    }
  }
  const ParameterSummary s = summarize(chains, 0.9);
  const oracle::Summary o = oracle::summarize(all, 0.9);
  EXPECT_NEAR(s.mean, o.mean, 1e-12);
  EXPECT_NEAR(s.std, o.sd, 1e-12);
  EXPECT_NEAR(s.ci_low, o.ci_low, 1e-12);
  EXPECT_NEAR(s.ci_high, o.ci_high, 1e-12);
  EXPECT_EQ(s.hdi_low, o.hdi_low);
  EXPECT_EQ(s.hdi_high, o.hdi_high);
  ASSERT_TRUE(s.rhat.has_value());
  EXPECT_LT(*s.rhat, 1.05);
}

TEST(EqualTailed, LinearInterpolation) {
  const std::vector<double> s = {4, 1, 3, 2};
  const Interval ci = equal_tailed_interval(s, 0.5);
  // Positions 0.75 and 2.25 over sorted {1, 2, 3, 4}.
  EXPECT_DOUBLE_EQ(ci.low, 1.75);
  EXPECT_DOUBLE_EQ(ci.high, 3.25);
}

TEST(EffectiveSampleSize, IndependentDrawsNearNominal) {
  oracle::Rng rng(5);
  Chains chains(2, std::vector<double>(5000));
  for (auto& c : chains) {
    for (double& v : c) v = rng.normal();
  }
  const auto ess = effective_sample_size(chains);
  ASSERT_TRUE(ess.has_value());
  EXPECT_GT(*ess, 7000.0);
  EXPECT_LT(*ess, 13000.0);
}

TEST(EffectiveSampleSize, AutocorrelatedDrawsShrink) {
  oracle::Rng rng(6);
  Chains chains(2, std::vector<double>(5000));
  for (auto& c : chains) {
    double v = 0.0;
    for (double& x : c) {
      v = 0.9 * v + rng.normal();
      x = v;
    }
  }
  const auto ess = effective_sample_size(chains);
  ASSERT_TRUE(ess.has_value());
  // AR(1) with phi = 0.9: ESS / N is about (1 - 0.9) / (1 + 0.9).
  EXPECT_GT(*ess, 250.0);
  EXPECT_LT(*ess, 1000.0);
}

TEST(Diagnose, FlagsNonConvergenceAndSkipsFixed) {
  ChainSamples a{0, 1, 2, {}, 0.5, 0};
  ChainSamples b{1, 2, 2, {}, 0.5, 0};
  oracle::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    a.draws.push_back(rng.normal());
    a.draws.push_back(1.0);
    b.draws.push_back(rng.normal() + 50.0);
    b.draws.push_back(1.0);
  }
  const std::vector<ChainSamples> chains = {a, b};
  const std::vector<std::string> names = {"mu", "sigma"};
  const std::vector<std::size_t> fixed = {1};
  const DiagnosticReport r = diagnose(chains, names, fixed, 1.05);
  EXPECT_FALSE(r.converged);
  ASSERT_TRUE(r.rhat[0].has_value());
  EXPECT_GT(*r.rhat[0], 1.05);
  EXPECT_FALSE(r.rhat[1].has_value());
}

TEST(Diagnose, SingleChainNeverConverged) {
  ChainSamples a{0, 1, 1, {1, 2, 3, 4}, 0.5, 0};
  const std::vector<ChainSamples> chains = {a};
  const std::vector<std::string> names = {"mu"};
  const DiagnosticReport r = diagnose(chains, names, {}, 1.05);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.rhat[0].has_value());
}

}  // namespace
}  // namespace fdbreak
