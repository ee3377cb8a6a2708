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

#include "fdbreak/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "fdbreak/digest.h"
#include "fdbreak/json.h"
#include "fdbreak/models.h"

namespace fdbreak {

using nlohmann::json;

double rmse(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.empty()) throw std::invalid_argument("rmse: empty input");
  if (observed.size() != predicted.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double r = observed[i] - predicted[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(observed.size()));
}

std::vector<double> linear_grid(double low, double high, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = low;
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = low + (high - low) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

namespace {

void check_predictable(const PosteriorFit& fit, const PredictOptions& options) {
  if (!fit.has_draws()) {
    throw std::invalid_argument("fit carries no retained draws");
  }
  if (!fit.diagnostics.converged && !options.allow_nonconverged) {
    throw std::invalid_argument("fit did not converge");
  }
}

std::vector<ModelParams> all_draws(const PosteriorFit& fit) {
  std::vector<ModelParams> draws;
  for (const auto& c : fit.chains) {
    for (std::size_t i = 0; i < c.n_draws(); ++i) {
      draws.push_back(params_from_vector(fit.model_kind, c.row(i),
                                         fit.config.lgf_exponent_scale));
    }
  }
  return draws;
}

std::optional<ModelParams> plug_in_point(const PosteriorFit& fit,
                                         const PredictOptions& options) {
  if (!options.plug_in) return std::nullopt;
  std::vector<double> means;
  for (const auto& p : fit.params) means.push_back(p.mean);
  return params_from_vector(fit.model_kind, means, fit.config.lgf_exponent_scale);
}

// Type-7 quantile by selection; reorders `v`.
double select_quantile(std::vector<double>& v, double p) {
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

// Posterior-mean prediction at each x without the band.
std::vector<double> predicted_speeds(const PosteriorFit& fit,
                                     std::span<const double> x,
                                     const PredictOptions& options) {
  check_predictable(fit, options);
  std::vector<double> out(x.size(), 0.0);
  if (const auto point = plug_in_point(fit, options)) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = mean_speed(x[i], *point);
    return out;
  }
  const auto draws = all_draws(fit);
  for (const auto& d : draws) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += mean_speed(x[i], d);
  }
  for (double& v : out) v /= static_cast<double>(draws.size());
  return out;
}

}  // namespace

std::vector<CurvePoint> predict_mean_curve(const PosteriorFit& fit,
                                           std::span<const double> grid,
                                           const PredictOptions& options) {
  if (grid.empty()) throw std::invalid_argument("predict_mean_curve: empty grid");
  check_predictable(fit, options);
  const auto draws = all_draws(fit);
  const auto point = plug_in_point(fit, options);
  const double mass = fit.config.credible_mass;

  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  std::vector<double> values(draws.size());
  for (double x : grid) {
    for (std::size_t d = 0; d < draws.size(); ++d) values[d] = mean_speed(x, draws[d]);
    const double mean =
        point ? mean_speed(x, *point)
              : std::accumulate(values.begin(), values.end(), 0.0) /
                    static_cast<double>(values.size());
    const double low = select_quantile(values, 0.5 * (1.0 - mass));
    const double high = select_quantile(values, 0.5 * (1.0 + mass));
    out.push_back({x, mean, low, high});
  }
  return out;
}

std::vector<SpeedBin> binned_rmse(std::span<const double> observed,
                                  std::span<const double> predicted,
                                  double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be > 0");
  if (observed.size() != predicted.size()) {
    throw std::invalid_argument("binned_rmse: length mismatch");
  }
  struct Acc {
    double ss = 0.0;
    std::size_t count = 0;
  };
  std::map<long long, Acc> bins;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const auto k = static_cast<long long>(std::floor(observed[i] / bin_width));
    const double r = observed[i] - predicted[i];
    Acc& a = bins[k];
    a.ss += r * r;
    ++a.count;
  }
  std::vector<SpeedBin> out;
  for (const auto& [k, a] : bins) {
    out.push_back({static_cast<double>(k) * bin_width,
                   static_cast<double>(k + 1) * bin_width,
                   std::sqrt(a.ss / static_cast<double>(a.count)), a.count});
  }
  return out;
}

std::vector<SpeedBin> binned_rmse(const DetectorDataset& data,
                                  const PosteriorFit& fit, double bin_width,
                                  const PredictOptions& options) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be > 0");
  const auto x = data.occupancies();
  const auto y = data.speeds();
  return binned_rmse(y, predicted_speeds(fit, x, options), bin_width);
}

namespace {

ModelComparison assess(const DetectorDataset& data, const PosteriorFit& fit,
                       std::string label, double bin_width,
                       const PredictOptions& options) {
  ModelComparison m;
  m.label = std::move(label);
  m.model_kind = fit.model_kind;
  m.breakpoints = fit.breakpoints;
  const auto x = data.occupancies();
  const auto y = data.speeds();
  const std::vector<double> predicted = predicted_speeds(fit, x, options);
  m.overall_rmse = rmse(y, predicted);
  m.bins = binned_rmse(y, predicted, bin_width);
  std::vector<double> values;
  for (const auto& b : m.bins) values.push_back(b.rmse);
  m.mean_bin_rmse =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean_bin_rmse) * (v - m.mean_bin_rmse);
  m.std_bin_rmse = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return m;
}

json bins_to_json(const std::vector<SpeedBin>& bins) {
  json a = json::array();
  for (const auto& b : bins) {
    a.push_back({{"bin_low", b.low}, {"bin_high", b.high}, {"rmse", b.rmse}, {"count", b.count}});
  }
  return a;
}

json model_to_json(const ModelComparison& m) {
  return json{{"label", m.label},
              {"model_kind", std::string(to_string(m.model_kind))},
              {"overall_rmse", m.overall_rmse},
              {"bins", bins_to_json(m.bins)},
              {"mean_bin_rmse", m.mean_bin_rmse},
              {"std_bin_rmse", m.std_bin_rmse},
              {"breakpoints", m.breakpoints}};
}

}  // namespace

ComparisonReport compare(const DetectorDataset& data, const PosteriorFit& fit_lgf,
                         const PosteriorFit& fit_two_regime, double bin_width,
                         const PredictOptions& options) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be > 0");
  data.require_fittable();
  const std::string digest = dataset_digest(data);
  for (const PosteriorFit* f : {&fit_lgf, &fit_two_regime}) {
    if (f->dataset_digest != digest) {
      throw DatasetMismatch("fit was computed on a different dataset");
    }
  }
  ComparisonReport r;
  r.bin_width = bin_width;
  r.n_observations = data.size();
  r.dataset_digest = digest;
  r.lgf = assess(data, fit_lgf, "lgf", bin_width, options);
  r.two_regime = assess(data, fit_two_regime, "two_regime", bin_width, options);

  // Both columns bin the same observed speeds, so the bin lists coincide.
  for (std::size_t i = 0; i < r.lgf.bins.size(); ++i) {
    const double a = r.lgf.bins[i].rmse;
    const double b = r.two_regime.bins[i].rmse;
    const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    std::string w = std::abs(a - b) <= tol ? "tie" : (a < b ? r.lgf.label : r.two_regime.label);
    r.winners.push_back({r.lgf.bins[i].low, r.lgf.bins[i].high, std::move(w)});
  }
  return r;
}

json comparison_to_json(const ComparisonReport& r) {
  json winners = json::array();
  for (const auto& w : r.winners) {
    winners.push_back({{"bin_low", w.low}, {"bin_high", w.high}, {"winner", w.winner}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"bin_width", r.bin_width},
              {"n_observations", r.n_observations},
              {"dataset_digest", r.dataset_digest},
              {"lgf", model_to_json(r.lgf)},
              {"two_regime", model_to_json(r.two_regime)},
              {"winners", winners}};
}

std::string binned_rmse_csv(const ComparisonReport& r) {
  std::string out = "bin_low,bin_high,count,rmse_lgf,rmse_two_regime\n";
  for (std::size_t i = 0; i < r.lgf.bins.size(); ++i) {
    const auto& a = r.lgf.bins[i];
    const auto& b = r.two_regime.bins[i];
    out += format_double(a.low) + ',' + format_double(a.high) + ',' +
           std::to_string(a.count) + ',' + format_double(a.rmse) + ',' +
           format_double(b.rmse) + '\n';
  }
  return out;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "occupancy,mean_speed,band_low,band_high\n";
  for (const auto& c : curve) {
    out += format_double(c.occupancy) + ',' + format_double(c.mean) + ',' +
           format_double(c.band_low) + ',' + format_double(c.band_high) + '\n';
  }
  return out;
}

}  // namespace fdbreak
