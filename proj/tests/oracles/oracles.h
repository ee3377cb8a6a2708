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

// Deliberately naive second implementations used as test oracles. None of
// these call into the library's numeric code; they share only the plain
// parameter structs.

#ifndef FDBREAK_TESTS_ORACLES_ORACLES_H_
#define FDBREAK_TESTS_ORACLES_ORACLES_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "fdbreak/domain.h"

namespace fdbreak::oracle {

double normal_logpdf(double v, double mean, double sd);

// Straight-line summation of Gaussian log densities, written from the model
// equations without any shared helpers.
double lgf_log_likelihood(const LgfParams& p, const std::vector<double>& x,
                          const std::vector<double>& y);
double two_regime_log_likelihood(const TwoRegimeParams& p, const std::vector<double>& x,
                                 const std::vector<double>& y);

// Default priors: coefficients N(0, 10^2), sigmas Half-Normal(5), two-regime
// lambda uniform over [low, high], LGF lambda N(0, 10^2).
double lgf_log_prior(const LgfParams& p);
double two_regime_log_prior(const TwoRegimeParams& p, double low, double high);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // divisor n - 1
  double ci_low = 0.0;
  double ci_high = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
};

// Percentiles by linear interpolation between order statistics; HDI by
// checking every window.
Summary summarize(std::vector<double> samples, double mass);
double percentile(std::vector<double> samples, double p);
std::pair<double, double> brute_force_hdi(std::vector<double> samples, double mass);

double rmse(const std::vector<double>& a, const std::vector<double>& b);

// Posterior of a normal mean with known sd and a N(prior_mean, prior_sd^2)
// prior: returns (mean, sd).
std::pair<double, double> conjugate_normal_posterior(const std::vector<double>& y,
                                                     double known_sd, double prior_mean,
                                                     double prior_sd);

// log p(y | lambda, sigmas) for the two-regime model with the coefficients
// integrated out under N(0, tau^2) priors, by the dense n x n Gaussian
// identity y ~ N(0, s^2 I + tau^2 X X') per regime.
double two_regime_collapsed_loglik(const std::vector<double>& x, const std::vector<double>& y,
                                   double lambda, double sigma1, double sigma2, double tau);

// SplitMix64-driven generator for property tests; independent of <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double low, double high);
  double normal();
  int integer(int low, int high);  // inclusive

 private:
  std::uint64_t state_;
};

}  // namespace fdbreak::oracle

#endif  // FDBREAK_TESTS_ORACLES_ORACLES_H_
