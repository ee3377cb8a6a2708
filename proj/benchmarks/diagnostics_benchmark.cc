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

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "fdbreak/diagnostics.h"

namespace fdbreak {
namespace {

std::vector<double> draws(std::size_t n) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void BM_Hdi(benchmark::State& state) {
  const std::vector<double> v = draws(static_cast<std::size_t>(state.range(0)));
  for (auto s : state) {
    benchmark::DoNotOptimize(hdi(v, 0.95));
  }
}
BENCHMARK(BM_Hdi)->Arg(20000)->Arg(100000);

void BM_GelmanRubin(benchmark::State& state) {
  const std::vector<std::vector<double>> chains = {draws(25000), draws(25000), draws(25000),
                                                   draws(25000)};
  for (auto s : state) {
    benchmark::DoNotOptimize(gelman_rubin(chains));
  }
}
BENCHMARK(BM_GelmanRubin);

}  // namespace
}  // namespace fdbreak

BENCHMARK_MAIN();
