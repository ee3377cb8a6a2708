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

#include "benchmark/benchmark.h"
#include "fdbreak/sampler.h"
#include "fdbreak/synth.h"

namespace fdbreak {
namespace {

void BM_FastFit(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  SynthSpec spec;
  spec.truth = kind == ModelKind::kLgf ? ModelParams{LgfParams{20, 65, 15, 3}}
                                       : ModelParams{TwoRegimeParams{62, -0.8, 55, -1.6, 14, 2, 4}};
  spec.n = 2000;
  spec.seed = 3;
  const DetectorDataset d = generate(spec);
  FitConfig c = FitConfig::fast();
  c.n_chains = 1;
  for (auto s : state) {
    benchmark::DoNotOptimize(run_chains(kind, d, PriorSpec{}, c));
  }
}
BENCHMARK(BM_FastFit)
    ->Arg(static_cast<int>(ModelKind::kLgf))
    ->Arg(static_cast<int>(ModelKind::kTwoRegime))
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fdbreak

BENCHMARK_MAIN();
