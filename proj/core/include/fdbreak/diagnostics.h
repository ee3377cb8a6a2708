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

// Convergence diagnostics and posterior summaries over per-chain draws.

#ifndef FDBREAK_DIAGNOSTICS_H_
#define FDBREAK_DIAGNOSTICS_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdbreak/domain.h"

namespace fdbreak {

class DiagnosticUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Classic (non-split) potential scale reduction factor:
//   W   = mean within-chain variance
//   B/n = variance of the chain means
//   R   = sqrt(((n - 1) / n * W + B / n) / W)
// Needs >= 2 chains of equal length >= 2 and W > 0.
double gelman_rubin(std::span<const std::vector<double>> chains);

// Multi-chain effective sample size using Geyer's initial monotone sequence
// on the averaged autocorrelations. nullopt when it cannot be estimated.
std::optional<double> effective_sample_size(
    std::span<const std::vector<double>> chains);

// Narrowest window of ceil(mass * N) consecutive sorted samples; ties go to the
// window with the lowest lower bound.
Interval hdi(std::span<const double> samples, double mass);

// Linear interpolation between order statistics (h = (N - 1) p).
double quantile_sorted(std::span<const double> sorted, double p);

// Percentiles (1 - mass) / 2 and (1 + mass) / 2.
Interval equal_tailed_interval(std::span<const double> samples, double mass);

// Pooled mean, sample std (N - 1), equal-tailed CI and HDI. R-hat and ESS are
// filled in when they can be computed.
ParameterSummary summarize(std::span<const std::vector<double>> chains,
                           double credible_mass, std::string name = {});

// R-hat per parameter; `converged` requires every non-fixed parameter to have
// an R-hat strictly below `threshold`.
DiagnosticReport diagnose(std::span<const ChainSamples> chains,
                          std::span<const std::string> names,
                          std::span<const std::size_t> fixed, double threshold);

}  // namespace fdbreak

#endif  // FDBREAK_DIAGNOSTICS_H_
