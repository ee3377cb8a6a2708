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

#include "fdbreak/synth.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fdbreak/models.h"
#include "oracles/oracles.h"

namespace fdbreak {
namespace {

TEST(Generate, NoiselessTwoRegimeLiesOnLines) {
  SynthSpec spec;
  const TwoRegimeParams p{62, -0.8, 55, -1.6, 14, 0, 0};
  spec.truth = p;
  spec.n = 500;
  spec.seed = 1;
  const DetectorDataset d = generate(spec);
  ASSERT_EQ(d.size(), 500u);
  for (const auto& o : d.observations) {
    const double line = o.occupancy <= p.lambda ? p.beta10 + p.beta11 * o.occupancy
                                                : p.beta20 + p.beta21 * o.occupancy;
    EXPECT_EQ(o.speed, line);
    EXPECT_GE(o.occupancy, 1.0);
    EXPECT_LE(o.occupancy, 35.0);
  }
}

TEST(Generate, NoiselessLgfAtInflection) {
  SynthSpec spec;
  spec.truth = LgfParams{20, 65, 15, 0};
  spec.n = 3;
  spec.occupancy = std::vector<double>{15.0, 0.0, 60.0};
  const DetectorDataset d = generate(spec);
  EXPECT_EQ(d.observations[0].speed, 42.5);
  EXPECT_EQ(d.observations[1].occupancy, 0.0);
}

TEST(Generate, NoiselessBreakpointsReproduced) {
  const TwoRegimeParams two{62, -0.8, 55, -1.6, 14, 0, 0};
  const LgfParams lgf{20, 65, 15, 0};
  for (const ModelParams& truth : {ModelParams{two}, ModelParams{lgf}}) {
    SynthSpec spec;
    spec.truth = truth;
    spec.n = 1;
    const double lambda = to_vector(truth)[lambda_index(kind_of(truth))];
    spec.occupancy = std::vector<double>{lambda};
    const double y = generate(spec).observations[0].speed;
    const Breakpoints b = derive_breakpoints(truth);
    EXPECT_EQ(b.occupancy, lambda);
    EXPECT_TRUE(y == b.speed_low || y == b.speed_high);
  }
}

TEST(Generate, SameSeedSameData) {
  SynthSpec spec;
  spec.seed = 99;
  EXPECT_EQ(generate(spec), generate(spec));
  SynthSpec other = spec;
  other.seed = 100;
  EXPECT_NE(generate(spec), generate(other));
}

TEST(Generate, ResidualScaleMatchesSigma) {
  for (const ModelParams& truth :
       {ModelParams{LgfParams{20, 65, 15, 3}}, ModelParams{TwoRegimeParams{62, -0.8, 55, -1.6, 14, 3, 3}}}) {
    SynthSpec spec;
    spec.truth = truth;
    spec.n = 100000;
    spec.seed = 7;
    const DetectorDataset d = generate(spec);
    double ss = 0.0;
    for (const auto& o : d.observations) {
      const double r = o.speed - mean_speed(o.occupancy, truth);
      ss += r * r;
    }
    EXPECT_NEAR(std::sqrt(ss / static_cast<double>(d.size())), 3.0, 0.03);
  }
}

TEST(Generate, NegativeSpeedsKeptUnlessTruncated) {
  SynthSpec spec;
  spec.truth = LgfParams{0, 10, 5, 5};
  spec.n = 2000;
  const DetectorDataset raw = generate(spec);
  EXPECT_TRUE(std::any_of(raw.observations.begin(), raw.observations.end(),
                          [](const Observation& o) { return o.speed < 0; }));
  spec.truncate_negative = true;
  const DetectorDataset cut = generate(spec);
  for (const auto& o : cut.observations) EXPECT_GE(o.speed, 0.0);
}

TEST(Generate, RejectsInvalidSpecs) {
  SynthSpec spec;
  spec.truth = LgfParams{20, 65, 15, -1};
  EXPECT_THROW(generate(spec), ValidationError);
  spec = SynthSpec{};
  spec.n = 0;
  EXPECT_THROW(generate(spec), ValidationError);
  spec = SynthSpec{};
  spec.occupancy = OccupancyRange{-1, 30};
  EXPECT_THROW(generate(spec), ValidationError);
  spec = SynthSpec{};
  spec.occupancy = std::vector<double>{1, 2};
  EXPECT_THROW(generate(spec), ValidationError);
}

TEST(SynthSpecJson, RoundTrip) {
  SynthSpec spec;
  spec.truth = TwoRegimeParams{62, -0.8, 55, -1.6, 14, 2, 4};
  spec.n = 3;
  spec.seed = 12345678901234ULL;
  spec.occupancy = std::vector<double>{1.5, 2.5, 3.5};
  spec.truncate_negative = true;
  const nlohmann::json j = spec;
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j.get<SynthSpec>(), spec);
  SynthSpec ranged;
  ranged.occupancy = OccupancyRange{2, 30};
  EXPECT_EQ(nlohmann::json(ranged).get<SynthSpec>(), ranged);
}

DetectorDataset lgf_data(std::size_t n, std::uint64_t seed) {
  SynthSpec spec;
  spec.n = n;
  spec.seed = seed;
  return generate(spec);
}

TEST(GridOracle, FlatLikelihoodGivesPrior) {
  const DetectorDataset d = lgf_data(10, 2);
  const LgfParams fixed{20, 0, 15, 1e6};
  const GridAxis axis{"s_free", -30, 30, 201};
  const GridDensity g = grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, fixed,
                                              std::span(&axis, 1));
  const auto c = g.coordinates(0);
  std::vector<double> prior(c.size());
  double total = 0.0;
  const double h = c[1] - c[0];
  for (std::size_t i = 0; i < c.size(); ++i) {
    prior[i] = std::exp(oracle::normal_logpdf(c[i], 0, 10));
    total += (i == 0 || i + 1 == c.size() ? 0.5 : 1.0) * h * prior[i];
  }
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(g.at(i), prior[i] / total, 1e-6);
}

TEST(GridOracle, OneAxisMatchesIndependentQuadrature) {
  const DetectorDataset d = lgf_data(200, 3);
  const LgfParams fixed{20, 65, 15, 3};
  const GridAxis axis{"lambda", 13, 17, 101};
  const GridDensity g = grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, fixed,
                                              std::span(&axis, 1));
  const auto x = d.occupancies();
  const auto y = d.speeds();
  auto log_post = [&](double lambda) {
    LgfParams p = fixed;
    p.lambda = lambda;
    return oracle::lgf_log_likelihood(p, x, y) + oracle::lgf_log_prior(p);
  };
  // Composite Simpson on a 20x finer mesh.
  const int m = 2000;
  const double h = (axis.high - axis.low) / m;
  const double peak = log_post(15.0);
  double total = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    total += w * std::exp(log_post(axis.low + i * h) - peak);
  }
  total *= h / 3.0;
  const auto c = g.coordinates(0);
  double max_density = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) max_density = std::max(max_density, g.at(i));
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(g.at(i), std::exp(log_post(c[i]) - peak) / total, 1e-4 * max_density);
  }
}

TEST(GridOracle, SymmetricDataGivesSymmetricDensity) {
  // Pairs (15 + d, 42.5 + a) and (15 - d, 42.5 - a) make the LGF likelihood
  // symmetric in lambda about 15 when the asymptotes are fixed at 20 and 65.
  oracle::Rng rng(4);
  SynthSpec spec;
  spec.truth = LgfParams{20, 65, 15, 0};
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) {
    const double dist = rng.uniform(0.1, 12);
    xs.push_back(15 + dist);
    xs.push_back(15 - dist);
  }
  spec.n = xs.size();
  spec.occupancy = xs;
  DetectorDataset d = generate(spec);
  for (std::size_t i = 0; i < d.size(); i += 2) {
    const double a = rng.normal() * 3.0;
    d.observations[i].speed += a;
    d.observations[i + 1].speed -= a;
  }
  PriorSpec prior;
  prior.breakpoint_prior = BreakpointPrior::kUniform;
  const GridAxis axis{"lambda", 12, 18, 121};
  const GridDensity g = grid_posterior_oracle(d, prior, BreakpointBounds{0, 40},
                                              LgfParams{20, 65, 15, 3}, std::span(&axis, 1));
  const std::size_t n = axis.points;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(g.at(i), g.at(n - 1 - i), 1e-9 * std::max(1.0, g.at(i)));
  }
}

TEST(GridOracle, TwoAxesNormalizeAndMarginalize) {
  const DetectorDataset d = lgf_data(100, 5);
  const std::vector<GridAxis> axes = {{"s_min", 16, 24, 101}, {"s_free", 61, 69, 121}};
  const GridDensity g =
      grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, LgfParams{20, 65, 15, 3}, axes);
  ASSERT_EQ(g.density.size(), 101u * 121u);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const auto m = g.marginal(axis);
    const auto c = g.coordinates(axis);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) total += 0.5 * (m[i] + m[i + 1]) * (c[i + 1] - c[i]);
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(GridOracle, Errors) {
  const DetectorDataset d = lgf_data(20, 6);
  const TwoRegimeParams fixed{62, -0.8, 55, -1.6, 14, 2, 4};
  const GridAxis outside{"lambda", 50, 60, 101};
  EXPECT_THROW(grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, fixed,
                                     std::span(&outside, 1)),
               GridError);
  const GridAxis coarse{"lambda", 10, 20, 50};
  EXPECT_THROW(grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, fixed,
                                     std::span(&coarse, 1)),
               ValidationError);
  const std::vector<GridAxis> three = {{"beta10", 0, 1, 100}, {"beta11", 0, 1, 100},
                                       {"lambda", 0, 1, 100}};
  EXPECT_THROW(grid_posterior_oracle(d, PriorSpec{}, BreakpointBounds{0, 40}, fixed, three),
               ValidationError);
}

}  // namespace
}  // namespace fdbreak
