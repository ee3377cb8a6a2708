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

#include <vector>

#include "benchmark/benchmark.h"
#include "fdbreak/models.h"
#include "fdbreak/synth.h"

namespace fdbreak {
namespace {

DetectorDataset dataset(const ModelParams& truth, std::size_t n) {
  SynthSpec spec;
  spec.truth = truth;
  spec.n = n;
  spec.seed = 1;
  return generate(spec);
}

void BM_LogPosteriorLgf(benchmark::State& state) {
  const LgfParams p{20, 65, 15, 3};
  const DetectorDataset d = dataset(p, static_cast<std::size_t>(state.range(0)));
  const BreakpointBounds b{0, 40};
  for (auto s : state) {
    benchmark::DoNotOptimize(log_posterior(p, d, PriorSpec{}, b));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPosteriorLgf)->Arg(1000)->Arg(10000);

void BM_LogPosteriorTwoRegime(benchmark::State& state) {
  const TwoRegimeParams p{62, -0.8, 55, -1.6, 14, 2, 4};
  const DetectorDataset d = dataset(p, static_cast<std::size_t>(state.range(0)));
  const BreakpointBounds b{0, 40};
  for (auto s : state) {
    benchmark::DoNotOptimize(log_posterior(p, d, PriorSpec{}, b));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPosteriorTwoRegime)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace fdbreak

BENCHMARK_MAIN();
