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

// Multi-chain adaptive random-walk Metropolis.
//
// Each iteration runs a componentwise Gaussian sweep (scales tuned toward a
// 0.44 acceptance rate) followed, once enough burn-in history exists, by one
// joint Gaussian move shaped by the empirical burn-in covariance (tuned toward
// 0.234). Positive parameters are moved on the log scale with the Jacobian
// term included. All tuning stops at the end of burn-in, so retained draws
// come from a fixed Metropolis kernel.

#ifndef FDBREAK_SAMPLER_H_
#define FDBREAK_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "fdbreak/domain.h"

namespace fdbreak {

enum class Transform { kIdentity, kLog };

// Unnormalized log density on the natural parameter scale. An instance may
// keep caches and is only ever driven by one chain at a time.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual double operator()(std::span<const double> theta) = 0;

  // Optional extra Metropolis-Hastings update that leaves the density
  // invariant, run once per iteration after the random-walk moves. `theta` is
  // on the natural scale. Returns true when it changed `theta`.
  virtual bool global_move(std::vector<double>& /*theta*/, std::mt19937_64& /*rng*/) {
    return false;
  }
};

using TargetFactory = std::function<std::unique_ptr<LogDensity>()>;

struct ChainSetup {
  std::vector<double> initial;         // natural scale
  std::vector<double> initial_scales;  // proposal sd on the sampling scale
};

struct SamplerSettings {
  int burn_in = 0;
  int draws = 1;
  double componentwise_target = 0.44;
  double block_target = 0.234;
};

std::uint64_t chain_seed(std::uint64_t base_seed, int chain_index);

// Runs one chain. Throws ValidationError when the initial point has zero
// density.
ChainSamples run_chain(LogDensity& target, std::span<const Transform> transforms,
                       const ChainSetup& setup, const SamplerSettings& settings,
                       int chain_index, std::uint64_t base_seed);

// Runs setups.size() chains on up to `threads` worker threads. Output order
// and content do not depend on `threads`.
std::vector<ChainSamples> run_chains_parallel(
    const TargetFactory& make_target, std::span<const Transform> transforms,
    std::span<const ChainSetup> setups, const SamplerSettings& settings,
    std::uint64_t base_seed, unsigned threads);

struct FixedParameter {
  std::size_t index = 0;  // model parameter order
  double value = 0.0;
};

struct RunOptions {
  unsigned threads = 1;
  std::vector<FixedParameter> fixed;
};

// Log posterior over the free model parameters, with fixed ones substituted.
// Uses cached sufficient statistics; agrees with log_posterior() up to
// rounding.
std::unique_ptr<LogDensity> make_model_target(
    ModelKind kind, std::span<const double> occupancy,
    std::span<const double> speed, const PriorSpec& prior,
    const BreakpointBounds& bounds, double lgf_exponent_scale,
    std::span<const FixedParameter> fixed = {});

// Heuristic, jittered starting point for one chain, in full model order.
// lambda starts at an occupancy quantile spread across chains (0.30 .. 0.70).
std::vector<double> initial_point(ModelKind kind, std::span<const double> occupancy,
                                  std::span<const double> speed,
                                  const BreakpointBounds& bounds, int chain_index,
                                  int n_chains, std::uint64_t base_seed);

// Samples the posterior of `kind` on `data` and summarizes it. The returned
// fit is flagged converged=false (not thrown) when diagnostics fail.
PosteriorFit run_chains(ModelKind kind, const DetectorDataset& data,
                        const PriorSpec& prior, const FitConfig& config,
                        const RunOptions& options = {});

// Recomputes summaries, diagnostics and breakpoint report from fit.chains.
void summarize_fit(PosteriorFit& fit);

}  // namespace fdbreak

#endif  // FDBREAK_SAMPLER_H_
