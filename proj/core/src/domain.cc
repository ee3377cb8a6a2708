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

#include "fdbreak/domain.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "fdbreak/digest.h"

namespace fdbreak {
namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DD?HH:MM[:SS]
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[13] != ':') return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi)) {
    return std::nullopt;
  }
  if (text.size() == 19) {
    if (text[16] != ':' || !parse_int(text.substr(17, 2), s) || s != 0) {
      return std::nullopt;
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  return local_days{ymd} + hours{h} + minutes{mi};
}

void Observation::validate() const {
  require(std::isfinite(occupancy) && occupancy >= 0.0 && occupancy <= 100.0,
          "occupancy out of range");
  require(std::isfinite(speed) && speed >= 0.0, "speed must be finite and >= 0");
  require(!volume || *volume >= 0, "volume must be nonnegative");
}

bool DetectorDataset::single_lane() const {
  return std::all_of(observations.begin(), observations.end(),
                     [&](const Observation& o) {
                       return o.lane_id == observations.front().lane_id;
                     });
}

std::vector<double> DetectorDataset::occupancies() const {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.occupancy);
  return out;
}

std::vector<double> DetectorDataset::speeds() const {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.speed);
  return out;
}

void DetectorDataset::validate() const {
  for (const auto& o : observations) o.validate();
}

void DetectorDataset::require_fittable() const {
  for (const auto& o : observations) {
    require(std::isfinite(o.occupancy) && o.occupancy >= 0.0 && o.occupancy <= 100.0,
            "occupancy out of range");
    require(std::isfinite(o.speed), "speed must be finite");
  }
  require(!observations.empty(), "dataset is empty");
  require(single_lane(), "dataset mixes lanes; select a single lane first");
}

std::string dataset_digest(const DetectorDataset& data) {
  std::string text;
  text.reserve(data.size() * 48);
  for (const auto& o : data.observations) {
    text += format_timestamp(o.timestamp);
    text += ',';
    text += std::to_string(o.lane_id);
    text += ',';
    text += format_double(o.speed);
    text += ',';
    text += format_double(o.occupancy);
    text += ',';
    if (o.volume) text += std::to_string(*o.volume);
    text += '\n';
  }
  return sha256_hex(text);
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLgf ? "lgf" : "two-regime";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lgf") return ModelKind::kLgf;
  if (text == "two-regime" || text == "two_regime") return ModelKind::kTwoRegime;
  throw ValidationError("unknown model kind '" + std::string(text) + "'");
}

void TwoRegimeParams::validate() const {
  require(std::isfinite(beta10) && std::isfinite(beta11) &&
              std::isfinite(beta20) && std::isfinite(beta21) &&
              std::isfinite(lambda),
          "two-regime parameters must be finite");
  require(std::isfinite(sigma1) && sigma1 > 0.0, "sigma1 must be > 0");
  require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be > 0");
}

void LgfParams::validate() const {
  require(std::isfinite(s_min) && std::isfinite(s_free) && std::isfinite(lambda),
          "LGF parameters must be finite");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
  require(std::isfinite(exponent_scale) && exponent_scale > 0.0,
          "exponent_scale must be > 0");
}

ModelKind kind_of(const ModelParams& params) {
  return std::holds_alternative<LgfParams>(params) ? ModelKind::kLgf
                                                   : ModelKind::kTwoRegime;
}

void validate(const ModelParams& params) {
  std::visit([](const auto& p) { p.validate(); }, params);
}

void BreakpointBounds::validate() const {
  require(std::isfinite(low) && std::isfinite(high) && low < high,
          "breakpoint bounds require low < high");
}

std::string_view to_string(BreakpointPrior prior) {
  switch (prior) {
    case BreakpointPrior::kUniform:
      return "uniform";
    case BreakpointPrior::kNormal:
      return "normal";
    case BreakpointPrior::kModelDefault:
      break;
  }
  return "default";
}

BreakpointPrior parse_breakpoint_prior(std::string_view text) {
  if (text == "default") return BreakpointPrior::kModelDefault;
  if (text == "uniform") return BreakpointPrior::kUniform;
  if (text == "normal") return BreakpointPrior::kNormal;
  throw ValidationError("unknown breakpoint prior '" + std::string(text) + "'");
}

void PriorSpec::validate() const {
  require(std::isfinite(coefficient_scale) && coefficient_scale > 0.0,
          "coefficient_scale must be > 0");
  require(std::isfinite(noise_scale) && noise_scale > 0.0,
          "noise_scale must be > 0");
  require(std::isfinite(breakpoint_scale) && breakpoint_scale > 0.0,
          "breakpoint_scale must be > 0");
  require(std::isfinite(breakpoint_mean), "breakpoint_mean must be finite");
}

void FitConfig::validate() const {
  require(n_chains >= 1, "n_chains must be >= 1");
  require(burn_in >= 0, "burn_in must be >= 0");
  require(inference_draws >= 1, "inference_draws must be >= 1");
  if (breakpoint_bounds) breakpoint_bounds->validate();
  require(credible_mass > 0.0 && credible_mass < 1.0,
          "credible_mass must lie in (0, 1)");
  require(rhat_threshold > 1.0, "rhat_threshold must be > 1");
  require(std::isfinite(lgf_exponent_scale) && lgf_exponent_scale > 0.0,
          "lgf_exponent_scale must be > 0");
}

BreakpointBounds FitConfig::resolve_bounds(const DetectorDataset& data) const {
  if (breakpoint_bounds) return *breakpoint_bounds;
  require(!data.empty(), "cannot derive breakpoint bounds from empty data");
  const auto [lo, hi] = std::minmax_element(
      data.observations.begin(), data.observations.end(),
      [](const Observation& a, const Observation& b) {
        return a.occupancy < b.occupancy;
      });
  BreakpointBounds b{lo->occupancy, hi->occupancy};
  require(b.low < b.high,
          "observed occupancy range is degenerate; set breakpoint bounds");
  return b;
}

FitConfig FitConfig::fast() {
  FitConfig c;
  c.burn_in = 2000;
  c.inference_draws = 5000;
  return c;
}

std::vector<double> ChainSamples::column(std::size_t param) const {
  std::vector<double> out(n_draws());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i, param);
  return out;
}

bool PosteriorFit::has_draws() const {
  return !chains.empty() &&
         std::all_of(chains.begin(), chains.end(),
                     [](const ChainSamples& c) { return c.n_draws() > 0; });
}

const ParameterSummary& PosteriorFit::param(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

}  // namespace fdbreak
