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

#include "fdbreak/synth.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "fdbreak/json.h"
#include "fdbreak/models.h"

namespace fdbreak {

using nlohmann::json;

namespace {

constexpr int kMaxTruncationRedraws = 1000;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

bool finite_nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

double noise_scale(const ModelParams& p, double x) {
  if (const auto* l = std::get_if<LgfParams>(&p)) return l->sigma;
  const auto& t = std::get<TwoRegimeParams>(p);
  return x <= t.lambda ? t.sigma1 : t.sigma2;
}

// Product of the per-axis trapezoid weights for a uniform grid.
std::vector<double> trapezoid_weights(const GridAxis& axis) {
  const double h = (axis.high - axis.low) / static_cast<double>(axis.points - 1);
  std::vector<double> w(axis.points, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

}  // namespace

void SynthSpec::validate() const {
  require(n >= 1, "n must be >= 1");
  if (const auto* l = std::get_if<LgfParams>(&truth)) {
    require(std::isfinite(l->s_min) && std::isfinite(l->s_free) && std::isfinite(l->lambda),
            "LGF parameters must be finite");
    require(finite_nonnegative(l->sigma), "sigma must be >= 0");
    require(std::isfinite(l->exponent_scale) && l->exponent_scale > 0.0,
            "exponent_scale must be > 0");
  } else {
    const auto& t = std::get<TwoRegimeParams>(truth);
    require(std::isfinite(t.beta10) && std::isfinite(t.beta11) && std::isfinite(t.beta20) &&
                std::isfinite(t.beta21) && std::isfinite(t.lambda),
            "two-regime parameters must be finite");
    require(finite_nonnegative(t.sigma1), "sigma1 must be >= 0");
    require(finite_nonnegative(t.sigma2), "sigma2 must be >= 0");
  }
  if (const auto* r = std::get_if<OccupancyRange>(&occupancy)) {
    require(std::isfinite(r->low) && std::isfinite(r->high) && r->low >= 0.0 &&
                r->high <= 100.0 && r->low <= r->high,
            "occupancy range must lie within [0, 100] with low <= high");
  } else {
    const auto& xs = std::get<std::vector<double>>(occupancy);
    require(xs.size() == n, "explicit occupancy list must have n entries");
    for (double x : xs) {
      require(std::isfinite(x) && x >= 0.0 && x <= 100.0, "occupancy out of range");
    }
  }
}

DetectorDataset generate(const SynthSpec& spec) {
  using namespace std::chrono;
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto* range = std::get_if<OccupancyRange>(&spec.occupancy);
  std::uniform_real_distribution<double> uniform(range ? range->low : 0.0,
                                                 range ? range->high : 1.0);
  const Timestamp start = local_days{year{2018} / January / 2} + hours{6};

  DetectorDataset d;
  d.site_label = "synthetic";
  d.observations.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double x =
        range ? uniform(rng) : std::get<std::vector<double>>(spec.occupancy)[i];
    const double mu = mean_speed(x, spec.truth);
    const double sigma = noise_scale(spec.truth, x);
    double y = mu + sigma * normal(rng);
    if (spec.truncate_negative) {
      for (int k = 0; y < 0.0 && k < kMaxTruncationRedraws; ++k) y = mu + sigma * normal(rng);
      y = std::max(y, 0.0);
    }
    Observation o;
    o.timestamp = start + minutes{5 * static_cast<long long>(i)};
    o.lane_id = 1;
    o.occupancy = x;
    o.speed = y;
    d.observations.push_back(o);
  }
  return d;
}

void to_json(json& j, const SynthSpec& v) {
  json params;
  std::visit([&](const auto& p) { params = p; }, v.truth);
  j = json{{"schema_version", kSchemaVersion},
           {"model_kind", std::string(to_string(kind_of(v.truth)))},
           {"params", params},
           {"n", v.n},
           {"seed", v.seed},
           {"truncate_negative", v.truncate_negative}};
  if (const auto* r = std::get_if<OccupancyRange>(&v.occupancy)) {
    j["occupancy"] = json{{"low", r->low}, {"high", r->high}};
  } else {
    j["occupancy"] = std::get<std::vector<double>>(v.occupancy);
  }
}

void from_json(const json& j, SynthSpec& v) {
  const ModelKind kind = parse_model_kind(j.at("model_kind").get<std::string>());
  const json& p = j.at("params");
  std::vector<double> values;
  for (const auto name : parameter_names(kind)) {
    values.push_back(p.at(std::string(name)).get<double>());
  }
  v.truth = params_from_vector(kind, values, p.value("exponent_scale", 1.0));
  v.n = j.at("n").get<std::size_t>();
  v.seed = j.value("seed", std::uint64_t{0});
  v.truncate_negative = j.value("truncate_negative", false);
  if (!j.contains("occupancy")) {
    v.occupancy = OccupancyRange{};
  } else if (j.at("occupancy").is_array()) {
    v.occupancy = j.at("occupancy").get<std::vector<double>>();
  } else {
    const OccupancyRange d;
    v.occupancy = OccupancyRange{j.at("occupancy").value("low", d.low),
                                 j.at("occupancy").value("high", d.high)};
  }
  v.validate();
}

std::vector<double> GridDensity::coordinates(std::size_t axis) const {
  const GridAxis& a = axes.at(axis);
  std::vector<double> c(a.points);
  for (std::size_t i = 0; i < a.points; ++i) {
    c[i] = a.low + (a.high - a.low) * static_cast<double>(i) /
                       static_cast<double>(a.points - 1);
  }
  return c;
}

double GridDensity::at(std::size_t i, std::size_t j) const {
  const std::size_t inner = axes.size() == 2 ? axes[1].points : 1;
  return density.at(i * inner + j);
}

std::vector<double> GridDensity::marginal(std::size_t axis) const {
  if (axes.size() == 1) return density;
  const std::size_t other = 1 - axis;
  const auto w = trapezoid_weights(axes.at(other));
  std::vector<double> out(axes.at(axis).points, 0.0);
  for (std::size_t i = 0; i < axes[0].points; ++i) {
    for (std::size_t j = 0; j < axes[1].points; ++j) {
      const double v = at(i, j);
      if (axis == 0) {
        out[i] += w[j] * v;
      } else {
        out[j] += w[i] * v;
      }
    }
  }
  return out;
}

GridDensity grid_posterior_oracle(const DetectorDataset& data, const PriorSpec& prior,
                                  const BreakpointBounds& bounds,
                                  const ModelParams& fixed,
                                  std::span<const GridAxis> axes) {
  data.require_fittable();
  prior.validate();
  bounds.validate();
  require(axes.size() == 1 || axes.size() == 2, "grid needs one or two axes");
  const ModelKind kind = kind_of(fixed);
  const auto names = parameter_names(kind);
  std::vector<std::size_t> index;
  for (const auto& a : axes) {
    require(a.points >= 100, "grid axes need at least 100 points");
    require(std::isfinite(a.low) && std::isfinite(a.high) && a.low < a.high,
            "grid axis needs low < high");
    const auto it = std::find(names.begin(), names.end(), a.parameter);
    require(it != names.end(), "unknown parameter '" + a.parameter + "'");
    index.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  require(axes.size() == 1 || index[0] != index[1], "grid axes must differ");

  GridDensity g;
  g.axes.assign(axes.begin(), axes.end());
  const std::size_t n0 = axes[0].points;
  const std::size_t n1 = axes.size() == 2 ? axes[1].points : 1;
  const auto c0 = g.coordinates(0);
  const auto c1 = axes.size() == 2 ? g.coordinates(1) : std::vector<double>{0.0};
  const double k = std::holds_alternative<LgfParams>(fixed)
                       ? std::get<LgfParams>(fixed).exponent_scale
                       : 1.0;
  const auto x = data.occupancies();
  const auto y = data.speeds();

  std::vector<double> v = to_vector(fixed);
  std::vector<double> log_density(n0 * n1);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      v[index[0]] = c0[i];
      if (axes.size() == 2) v[index[1]] = c1[j];
      const ModelParams p = params_from_vector(kind, v, k);
      double lp = log_prior(p, prior, bounds);
      if (lp != -std::numeric_limits<double>::infinity()) {
        lp += log_likelihood(p, x, y);
      }
      log_density[i * n1 + j] = lp;
      peak = std::max(peak, lp);
    }
  }
  if (!std::isfinite(peak)) throw GridError("posterior is zero at every grid point");

  const auto w0 = trapezoid_weights(axes[0]);
  const auto w1 = axes.size() == 2 ? trapezoid_weights(axes[1]) : std::vector<double>{1.0};
  g.density.resize(n0 * n1);
  double total = 0.0;
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double d = std::exp(log_density[i * n1 + j] - peak);
      g.density[i * n1 + j] = d;
      total += w0[i] * w1[j] * d;
    }
  }
  for (double& d : g.density) d /= total;
  return g;
}

}  // namespace fdbreak
