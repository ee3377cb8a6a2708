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

#include "fdbreak/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fdbreak {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_logpdf(double v, double mean, double sd) {
  const double z = (v - mean) / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * z * z;
}

double half_normal_logpdf(double v, double scale) {
  if (!(v > 0.0)) return kNegInf;
  return std::numbers::ln2 + normal_logpdf(v, 0.0, scale);
}

double uniform_logpdf(double v, const BreakpointBounds& b) {
  return b.contains(v) ? -std::log(b.high - b.low) : kNegInf;
}

double gaussian_sum(std::span<const double> x, std::span<const double> y,
                    auto&& mean, auto&& sd) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += normal_logpdf(y[i], mean(x[i]), sd(x[i]));
  }
  return total;
}

double breakpoint_logprior(double lambda, BreakpointPrior kind,
                           const PriorSpec& prior,
                           const BreakpointBounds& bounds) {
  if (kind == BreakpointPrior::kUniform) return uniform_logpdf(lambda, bounds);
  return normal_logpdf(lambda, prior.breakpoint_mean, prior.breakpoint_scale);
}

}  // namespace

std::span<const std::string_view> parameter_names(ModelKind kind) {
  if (kind == ModelKind::kLgf) return kLgfParamNames;
  return kTwoRegimeParamNames;
}

std::size_t parameter_count(ModelKind kind) {
  return parameter_names(kind).size();
}

std::size_t lambda_index(ModelKind kind) {
  return kind == ModelKind::kLgf ? 2 : 4;
}

bool is_scale_parameter(ModelKind kind, std::size_t index) {
  return kind == ModelKind::kLgf ? index == 3 : index >= 5;
}

std::vector<double> to_vector(const ModelParams& params) {
  if (const auto* p = std::get_if<LgfParams>(&params)) {
    return {p->s_min, p->s_free, p->lambda, p->sigma};
  }
  const auto& q = std::get<TwoRegimeParams>(params);
  return {q.beta10, q.beta11, q.beta20, q.beta21, q.lambda, q.sigma1, q.sigma2};
}

ModelParams params_from_vector(ModelKind kind, std::span<const double> v,
                               double lgf_exponent_scale) {
  if (v.size() != parameter_count(kind)) {
    throw ValidationError("parameter vector has the wrong length");
  }
  if (kind == ModelKind::kLgf) {
    return LgfParams{v[0], v[1], v[2], v[3], lgf_exponent_scale};
  }
  return TwoRegimeParams{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

double logistic_complement(double z) {
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double two_regime_mean(double x, const TwoRegimeParams& p) {
  return x <= p.lambda ? p.beta10 + p.beta11 * x : p.beta20 + p.beta21 * x;
}

double lgf_mean(double x, const LgfParams& p) {
  const double g = logistic_complement((x - p.lambda) / p.exponent_scale);
  return p.s_min + (p.s_free - p.s_min) * g;
}

double mean_speed(double x, const ModelParams& p) {
  if (const auto* lgf = std::get_if<LgfParams>(&p)) return lgf_mean(x, *lgf);
  return two_regime_mean(x, std::get<TwoRegimeParams>(p));
}

double log_likelihood(const ModelParams& params, std::span<const double> x,
                      std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("occupancy and speed spans differ in length");
  }
  if (const auto* p = std::get_if<LgfParams>(&params)) {
    if (!(p->sigma > 0.0)) throw ValidationError("sigma must be > 0");
    return gaussian_sum(
        x, y, [&](double xi) { return lgf_mean(xi, *p); },
        [&](double) { return p->sigma; });
  }
  const auto& q = std::get<TwoRegimeParams>(params);
  if (!(q.sigma1 > 0.0) || !(q.sigma2 > 0.0)) {
    throw ValidationError("sigma1 and sigma2 must be > 0");
  }
  return gaussian_sum(
      x, y, [&](double xi) { return two_regime_mean(xi, q); },
      [&](double xi) { return xi <= q.lambda ? q.sigma1 : q.sigma2; });
}

double log_likelihood(const ModelParams& params, const DetectorDataset& data) {
  const auto x = data.occupancies();
  const auto y = data.speeds();
  return log_likelihood(params, x, y);
}

double log_prior(const ModelParams& params, const PriorSpec& prior,
                 const BreakpointBounds& bounds) {
  const double c = prior.coefficient_scale;
  if (const auto* p = std::get_if<LgfParams>(&params)) {
    const BreakpointPrior kind = prior.breakpoint_prior == BreakpointPrior::kUniform
                                     ? BreakpointPrior::kUniform
                                     : BreakpointPrior::kNormal;
    const double ls = half_normal_logpdf(p->sigma, prior.noise_scale);
    const double ll = breakpoint_logprior(p->lambda, kind, prior, bounds);
    if (ls == kNegInf || ll == kNegInf) return kNegInf;
    return normal_logpdf(p->s_min, 0.0, c) + normal_logpdf(p->s_free, 0.0, c) +
           ll + ls;
  }
  const auto& q = std::get<TwoRegimeParams>(params);
  if (!bounds.contains(q.lambda)) return kNegInf;
  const BreakpointPrior kind = prior.breakpoint_prior == BreakpointPrior::kNormal
                                   ? BreakpointPrior::kNormal
                                   : BreakpointPrior::kUniform;
  const double l1 = half_normal_logpdf(q.sigma1, prior.noise_scale);
  const double l2 = half_normal_logpdf(q.sigma2, prior.noise_scale);
  if (l1 == kNegInf || l2 == kNegInf) return kNegInf;
  return normal_logpdf(q.beta10, 0.0, c) + normal_logpdf(q.beta11, 0.0, c) +
         normal_logpdf(q.beta20, 0.0, c) + normal_logpdf(q.beta21, 0.0, c) +
         breakpoint_logprior(q.lambda, kind, prior, bounds) + l1 + l2;
}

double log_posterior(const ModelParams& params, std::span<const double> x,
                     std::span<const double> y, const PriorSpec& prior,
                     const BreakpointBounds& bounds) {
  const double lp = log_prior(params, prior, bounds);
  if (lp == kNegInf) return kNegInf;
  return lp + log_likelihood(params, x, y);
}

double log_posterior(const ModelParams& params, const DetectorDataset& data,
                     const PriorSpec& prior, const BreakpointBounds& bounds) {
  const auto x = data.occupancies();
  const auto y = data.speeds();
  return log_posterior(params, x, y, prior, bounds);
}

Breakpoints derive_breakpoints(const ModelParams& params) {
  if (const auto* p = std::get_if<LgfParams>(&params)) {
    const double mid = 0.5 * (p->s_min + p->s_free);
    return {p->lambda, mid, mid, 0.0};
  }
  const auto& q = std::get<TwoRegimeParams>(params);
  const double mu1 = q.beta10 + q.beta11 * q.lambda;
  const double mu2 = q.beta20 + q.beta21 * q.lambda;
  const double lo = std::min(mu1, mu2);
  const double hi = std::max(mu1, mu2);
  return {q.lambda, lo, hi, hi - lo};
}

}  // namespace fdbreak
