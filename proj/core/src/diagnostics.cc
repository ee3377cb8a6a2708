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

#include "fdbreak/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fdbreak {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

std::vector<double> pooled(std::span<const std::vector<double>> chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

void check_chain_shape(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) {
    throw DiagnosticUnavailable("R-hat needs at least 2 chains");
  }
  const std::size_t n = chains.front().size();
  if (n < 2) throw DiagnosticUnavailable("R-hat needs chains of length >= 2");
  for (const auto& c : chains) {
    if (c.size() != n) {
      throw DiagnosticUnavailable("R-hat needs chains of equal length");
    }
  }
}

}  // namespace

double gelman_rubin(std::span<const std::vector<double>> chains) {
  check_chain_shape(chains);
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const double m = mean_of(c);
    means.push_back(m);
    w += sample_variance(c, m);
  }
  w /= static_cast<double>(chains.size());
  if (!(w > 0.0)) {
    throw DiagnosticUnavailable("zero within-chain variance");
  }
  const double b_over_n = sample_variance(means, mean_of(means));
  return std::sqrt(((n - 1.0) / n * w + b_over_n) / w);
}

std::optional<double> effective_sample_size(
    std::span<const std::vector<double>> chains) {
  if (chains.empty() || chains.front().size() < 4) return std::nullopt;
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) return std::nullopt;
  }
  const std::size_t m = chains.size();

  std::vector<double> means(m);
  std::vector<double> variances(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = mean_of(chains[j]);
    variances[j] = sample_variance(chains[j], means[j]);
  }
  const double w = mean_of(variances);
  if (!(w > 0.0)) return std::nullopt;
  const double b_over_n = m > 1 ? sample_variance(means, mean_of(means)) : 0.0;
  const double var_plus = (static_cast<double>(n) - 1.0) /
                              static_cast<double>(n) * w + b_over_n;

  // Mean over chains of the lag-t autocovariance (biased, divisor n).
  auto autocov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& c = chains[j];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        s += (c[i] - means[j]) * (c[i + lag] - means[j]);
      }
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (w - autocov(lag)) / var_plus; };

  // Geyer: sum pairs (rho_{2k} + rho_{2k+1}) while positive, enforcing a
  // monotone non-increasing sequence. Capped so a stuck chain stays cheap.
  constexpr std::size_t kMaxPairs = 1000;
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n && k < kMaxPairs; ++k) {
    double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  if (!(tau > 0.0)) return std::nullopt;
  return static_cast<double>(m * n) / tau;
}

Interval hdi(std::span<const double> samples, double mass) {
  if (samples.empty()) throw std::invalid_argument("hdi: no samples");
  if (!(mass > 0.0 && mass < 1.0)) {
    throw std::invalid_argument("hdi: mass must lie in (0, 1)");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // The epsilon keeps products such as 0.6 * 5 from rounding up past 3.
  auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double best_width = sorted[k - 1] - sorted[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    const double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + k - 1]};
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: no samples");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Interval equal_tailed_interval(std::span<const double> samples, double mass) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return {quantile_sorted(sorted, 0.5 * (1.0 - mass)),
          quantile_sorted(sorted, 0.5 * (1.0 + mass))};
}

ParameterSummary summarize(std::span<const std::vector<double>> chains,
                           double credible_mass, std::string name) {
  const std::vector<double> all = pooled(chains);
  if (all.empty()) throw std::invalid_argument("summarize: no draws");
  ParameterSummary s;
  s.name = std::move(name);
  s.mean = mean_of(all);
  s.std = std::sqrt(sample_variance(all, s.mean));
  const Interval ci = equal_tailed_interval(all, credible_mass);
  s.ci_low = ci.low;
  s.ci_high = ci.high;
  const Interval h = hdi(all, credible_mass);
  s.hdi_low = h.low;
  s.hdi_high = h.high;
  try {
    s.rhat = gelman_rubin(chains);
  } catch (const DiagnosticUnavailable&) {
    s.rhat.reset();
  }
  s.ess = effective_sample_size(chains);
  return s;
}

DiagnosticReport diagnose(std::span<const ChainSamples> chains,
                          std::span<const std::string> names,
                          std::span<const std::size_t> fixed, double threshold) {
  DiagnosticReport report;
  report.names.assign(names.begin(), names.end());
  report.converged = true;
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<std::vector<double>> columns;
    for (const auto& c : chains) columns.push_back(c.column(p));
    const bool is_fixed =
        std::find(fixed.begin(), fixed.end(), p) != fixed.end();
    std::optional<double> rhat;
    if (!is_fixed) {
      try {
        rhat = gelman_rubin(columns);
      } catch (const DiagnosticUnavailable&) {
      }
      if (!rhat || !(*rhat < threshold)) report.converged = false;
    }
    report.rhat.push_back(rhat);
    report.ess.push_back(is_fixed ? std::nullopt : effective_sample_size(columns));
  }
  if (chains.size() < 2) {
    report.converged = false;
    report.note = "R-hat needs at least 2 chains";
  } else if (!report.converged) {
    report.note = "R-hat at or above threshold (or unavailable) for some parameter";
  }
  return report;
}

}  // namespace fdbreak
