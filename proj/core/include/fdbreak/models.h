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

// Mean functions, densities and derived breakpoints for the two speed-
// occupancy regression models.
//
//   two-regime:  y ~ N(b10 + b11 x, s1^2)  if x <= lambda
//                y ~ N(b20 + b21 x, s2^2)  otherwise
//   logistic:    y ~ N(s_min + (s_free - s_min) / (1 + exp((x - lambda) / k)),
//                      sigma^2)            with k = exponent_scale (default 1)

#ifndef FDBREAK_MODELS_H_
#define FDBREAK_MODELS_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fdbreak/domain.h"

namespace fdbreak {

inline constexpr std::string_view kLgfParamNames[] = {"s_min", "s_free",
                                                      "lambda", "sigma"};
inline constexpr std::string_view kTwoRegimeParamNames[] = {
    "beta10", "beta11", "beta20", "beta21", "lambda", "sigma1", "sigma2"};

std::span<const std::string_view> parameter_names(ModelKind kind);
std::size_t parameter_count(ModelKind kind);
std::size_t lambda_index(ModelKind kind);
// True for the noise-scale parameters (sampled on the log scale).
bool is_scale_parameter(ModelKind kind, std::size_t index);

std::vector<double> to_vector(const ModelParams& params);
// No validation; the caller decides how to treat invalid points.
ModelParams params_from_vector(ModelKind kind, std::span<const double> values,
                               double lgf_exponent_scale = 1.0);

// 1 / (1 + exp(z)) without overflow for any finite z.
double logistic_complement(double z);

double two_regime_mean(double x, const TwoRegimeParams& p);
double lgf_mean(double x, const LgfParams& p);
double mean_speed(double x, const ModelParams& p);

// Sum of Gaussian log densities. Throws ValidationError for a non-positive
// sigma or mismatched spans.
double log_likelihood(const ModelParams& params, std::span<const double> x,
                      std::span<const double> y);
double log_likelihood(const ModelParams& params, const DetectorDataset& data);

// Sum of the per-parameter log prior densities; -inf outside the support
// (sigma <= 0, or lambda outside `bounds` when the breakpoint prior is
// uniform). The two-regime lambda is always restricted to `bounds`.
double log_prior(const ModelParams& params, const PriorSpec& prior,
                 const BreakpointBounds& bounds);

double log_posterior(const ModelParams& params, std::span<const double> x,
                     std::span<const double> y, const PriorSpec& prior,
                     const BreakpointBounds& bounds);
double log_posterior(const ModelParams& params, const DetectorDataset& data,
                     const PriorSpec& prior, const BreakpointBounds& bounds);

// Breakpoint quantities implied by a single parameter point. For LGF the
// speed breakpoint is the curve at its inflection, (s_min + s_free) / 2, and
// low == high. For the two-regime model low/high are min/max of the two line
// values at lambda.
struct Breakpoints {
  double occupancy = 0.0;
  double speed_low = 0.0;
  double speed_high = 0.0;
  double band_width = 0.0;

  double speed_mid() const { return 0.5 * (speed_low + speed_high); }
};

Breakpoints derive_breakpoints(const ModelParams& params);

}  // namespace fdbreak

#endif  // FDBREAK_MODELS_H_
