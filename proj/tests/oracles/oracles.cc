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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdbreak::oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double normal_logpdf(double v, double mean, double sd) {
  const double r = (v - mean) / sd;
  return -0.5 * std::log(2.0 * kPi) - std::log(sd) - 0.5 * r * r;
}

double lgf_log_likelihood(const LgfParams& p, const std::vector<double>& x,
                          const std::vector<double>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double alpha =
        p.s_min + (p.s_free - p.s_min) / (1.0 + std::exp((x[i] - p.lambda) / p.exponent_scale));
    total += normal_logpdf(y[i], alpha, p.sigma);
  }
  return total;
}

double two_regime_log_likelihood(const TwoRegimeParams& p, const std::vector<double>& x,
                                 const std::vector<double>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= p.lambda) {
      total += normal_logpdf(y[i], p.beta10 + p.beta11 * x[i], p.sigma1);
    } else {
      total += normal_logpdf(y[i], p.beta20 + p.beta21 * x[i], p.sigma2);
    }
  }
  return total;
}

namespace {
double half_normal_logpdf(double v, double scale) {
  if (v < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(2.0) + normal_logpdf(v, 0.0, scale);
}
}  // namespace

double lgf_log_prior(const LgfParams& p) {
  if (p.sigma <= 0.0) return -std::numeric_limits<double>::infinity();
  return normal_logpdf(p.s_min, 0.0, 10.0) + normal_logpdf(p.s_free, 0.0, 10.0) +
         normal_logpdf(p.lambda, 0.0, 10.0) + half_normal_logpdf(p.sigma, 5.0);
}

double two_regime_log_prior(const TwoRegimeParams& p, double low, double high) {
  if (p.sigma1 <= 0.0 || p.sigma2 <= 0.0 || p.lambda < low || p.lambda > high) {
    return -std::numeric_limits<double>::infinity();
  }
  return normal_logpdf(p.beta10, 0.0, 10.0) + normal_logpdf(p.beta11, 0.0, 10.0) +
         normal_logpdf(p.beta20, 0.0, 10.0) + normal_logpdf(p.beta21, 0.0, 10.0) -
         std::log(high - low) + half_normal_logpdf(p.sigma1, 5.0) +
         half_normal_logpdf(p.sigma2, 5.0);
}

double percentile(std::vector<double> s, double p) {
  std::sort(s.begin(), s.end());
  const double pos = p * static_cast<double>(s.size() - 1);
  const std::size_t below = static_cast<std::size_t>(pos);
  if (below + 1 >= s.size()) return s.back();
  const double frac = pos - static_cast<double>(below);
  return s[below] * (1.0 - frac) + s[below + 1] * frac;
}

std::pair<double, double> brute_force_hdi(std::vector<double> s, double mass) {
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  // Smallest window count k with k / n >= mass.
  std::size_t k = 1;
  while (static_cast<double>(k) < mass * static_cast<double>(n) - 1e-9) ++k;
  double best_width = std::numeric_limits<double>::infinity();
  std::pair<double, double> best{s.front(), s.front()};
  for (std::size_t start = 0; start + k <= n; ++start) {
    const double width = s[start + k - 1] - s[start];
    if (width < best_width) {
      best_width = width;
      best = {s[start], s[start + k - 1]};
    }
  }
  return best;
}

Summary summarize(std::vector<double> samples, double mass) {
  Summary out;
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (double v : samples) ss += (v - out.mean) * (v - out.mean);
  out.sd = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : 0.0;
  out.ci_low = percentile(samples, 0.5 - 0.5 * mass);
  out.ci_high = percentile(samples, 0.5 + 0.5 * mass);
  const auto h = brute_force_hdi(samples, mass);
  out.hdi_low = h.first;
  out.hdi_high = h.second;
  return out;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(total / static_cast<double>(a.size()));
}

std::pair<double, double> conjugate_normal_posterior(const std::vector<double>& y,
                                                     double known_sd, double prior_mean,
                                                     double prior_sd) {
  double sum = 0.0;
  for (double v : y) sum += v;
  const double precision = 1.0 / (prior_sd * prior_sd) +
                           static_cast<double>(y.size()) / (known_sd * known_sd);
  const double mean =
      (prior_mean / (prior_sd * prior_sd) + sum / (known_sd * known_sd)) / precision;
  return {mean, std::sqrt(1.0 / precision)};
}

namespace {

// log N(y; 0, s^2 I + tau^2 X X') by Cholesky of the dense covariance.
double dense_marginal(const std::vector<double>& x, const std::vector<double>& y, double s,
                      double tau) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = tau * tau * (1.0 + x[i] * x[j]) + (i == j ? s * s : 0.0);
    }
  }
  // In-place lower Cholesky.
  for (std::size_t j = 0; j < n; ++j) {
    double d = c[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= c[j * n + k] * c[j * n + k];
    if (d <= 0.0) throw std::runtime_error("dense_marginal: not positive definite");
    c[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = c[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= c[i * n + k] * c[j * n + k];
      c[i * n + j] = v / c[j * n + j];
    }
  }
  std::vector<double> z(n);
  double log_det = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = y[i];
    for (std::size_t k = 0; k < i; ++k) v -= c[i * n + k] * z[k];
    z[i] = v / c[i * n + i];
    quad += z[i] * z[i];
    log_det += 2.0 * std::log(c[i * n + i]);
  }
  return -0.5 * static_cast<double>(n) * std::log(2.0 * kPi) - 0.5 * log_det - 0.5 * quad;
}

}  // namespace

double two_regime_collapsed_loglik(const std::vector<double>& x, const std::vector<double>& y,
                                   double lambda, double sigma1, double sigma2, double tau) {
  std::vector<double> x1, y1, x2, y2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= lambda) {
      x1.push_back(x[i]);
      y1.push_back(y[i]);
    } else {
      x2.push_back(x[i]);
      y2.push_back(y[i]);
    }
  }
  return dense_marginal(x1, y1, sigma1, tau) + dense_marginal(x2, y2, sigma2, tau);
}

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double low, double high) { return low + (high - low) * uniform(); }

double Rng::normal() {
  // Box-Muller; 1 - u keeps the log argument positive.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

int Rng::integer(int low, int high) {
  return low + static_cast<int>(next() % static_cast<std::uint64_t>(high - low + 1));
}

}  // namespace fdbreak::oracle
