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

#include "fdbreak/json.h"

#include "fdbreak/models.h"

namespace fdbreak {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void check_summary(const ParameterSummary& s) {
  if (!(s.ci_low <= s.ci_high) || !(s.hdi_low <= s.hdi_high)) {
    throw ValidationError("summary '" + s.name + "' has an inverted interval");
  }
}

json chain_to_json(const ChainSamples& c, bool include_draws) {
  json j{{"chain_index", c.chain_index},
         {"seed", c.seed},
         {"n_params", c.n_params},
         {"n_draws", c.n_draws()},
         {"acceptance_rate", c.acceptance_rate},
         {"post_burn_in_adaptations", c.post_burn_in_adaptations}};
  if (include_draws) {
    json rows = json::array();
    for (std::size_t i = 0; i < c.n_draws(); ++i) {
      const auto r = c.row(i);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["draws"] = std::move(rows);
  }
  return j;
}

ChainSamples chain_from_json(const json& j) {
  ChainSamples c;
  j.at("chain_index").get_to(c.chain_index);
  j.at("seed").get_to(c.seed);
  j.at("n_params").get_to(c.n_params);
  j.at("acceptance_rate").get_to(c.acceptance_rate);
  j.at("post_burn_in_adaptations").get_to(c.post_burn_in_adaptations);
  if (j.contains("draws")) {
    for (const auto& row : j.at("draws")) {
      if (row.size() != c.n_params) throw ValidationError("draw row has the wrong width");
      for (const auto& v : row) c.draws.push_back(v.get<double>());
    }
  }
  return c;
}

}  // namespace

void to_json(json& j, const Observation& v) {
  j = json{{"timestamp", format_timestamp(v.timestamp)},
           {"lane_id", v.lane_id},
           {"occupancy", v.occupancy},
           {"speed", v.speed},
           {"volume", v.volume ? json(*v.volume) : json(nullptr)}};
}

void from_json(const json& j, Observation& v) {
  const auto ts = parse_timestamp(j.at("timestamp").get<std::string>());
  if (!ts) throw ValidationError("unparseable timestamp");
  v.timestamp = *ts;
  j.at("lane_id").get_to(v.lane_id);
  j.at("occupancy").get_to(v.occupancy);
  j.at("speed").get_to(v.speed);
  if (j.contains("volume") && !j.at("volume").is_null()) {
    v.volume = j.at("volume").get<std::int64_t>();
  } else {
    v.volume.reset();
  }
  v.validate();
}

void to_json(json& j, const DetectorDataset& v) {
  j = json{{"site_label", v.site_label},
           {"n", v.size()},
           {"observations", v.observations}};
}

void from_json(const json& j, DetectorDataset& v) {
  j.at("site_label").get_to(v.site_label);
  j.at("observations").get_to(v.observations);
  if (j.contains("n") && j.at("n").get<std::size_t>() != v.size()) {
    throw ValidationError("dataset count n does not match observations");
  }
  v.validate();
}

void to_json(json& j, const TwoRegimeParams& v) {
  j = json{{"beta10", v.beta10}, {"beta11", v.beta11}, {"beta20", v.beta20},
           {"beta21", v.beta21}, {"lambda", v.lambda}, {"sigma1", v.sigma1},
           {"sigma2", v.sigma2}};
}

void from_json(const json& j, TwoRegimeParams& v) {
  j.at("beta10").get_to(v.beta10);
  j.at("beta11").get_to(v.beta11);
  j.at("beta20").get_to(v.beta20);
  j.at("beta21").get_to(v.beta21);
  j.at("lambda").get_to(v.lambda);
  j.at("sigma1").get_to(v.sigma1);
  j.at("sigma2").get_to(v.sigma2);
  v.validate();
}

void to_json(json& j, const LgfParams& v) {
  j = json{{"s_min", v.s_min},
           {"s_free", v.s_free},
           {"lambda", v.lambda},
           {"sigma", v.sigma},
           {"exponent_scale", v.exponent_scale}};
}

void from_json(const json& j, LgfParams& v) {
  j.at("s_min").get_to(v.s_min);
  j.at("s_free").get_to(v.s_free);
  j.at("lambda").get_to(v.lambda);
  j.at("sigma").get_to(v.sigma);
  v.exponent_scale = j.value("exponent_scale", 1.0);
  v.validate();
}

void to_json(json& j, const BreakpointBounds& v) {
  j = json{{"low", v.low}, {"high", v.high}};
}

void from_json(const json& j, BreakpointBounds& v) {
  j.at("low").get_to(v.low);
  j.at("high").get_to(v.high);
  v.validate();
}

void to_json(json& j, const PriorSpec& v) {
  j = json{{"coefficient_scale", v.coefficient_scale},
           {"noise_scale", v.noise_scale},
           {"breakpoint_prior", std::string(to_string(v.breakpoint_prior))},
           {"breakpoint_mean", v.breakpoint_mean},
           {"breakpoint_scale", v.breakpoint_scale}};
}

void from_json(const json& j, PriorSpec& v) {
  const PriorSpec d;
  v.coefficient_scale = j.value("coefficient_scale", d.coefficient_scale);
  v.noise_scale = j.value("noise_scale", d.noise_scale);
  v.breakpoint_prior = parse_breakpoint_prior(
      j.value("breakpoint_prior", std::string(to_string(d.breakpoint_prior))));
  v.breakpoint_mean = j.value("breakpoint_mean", d.breakpoint_mean);
  v.breakpoint_scale = j.value("breakpoint_scale", d.breakpoint_scale);
  v.validate();
}

void to_json(json& j, const FitConfig& v) {
  j = json{{"n_chains", v.n_chains},
           {"burn_in", v.burn_in},
           {"inference_draws", v.inference_draws},
           {"seed", v.seed},
           {"breakpoint_bounds",
            v.breakpoint_bounds ? json(*v.breakpoint_bounds) : json("from-data")},
           {"credible_mass", v.credible_mass},
           {"rhat_threshold", v.rhat_threshold},
           {"lgf_exponent_scale", v.lgf_exponent_scale}};
}

void from_json(const json& j, FitConfig& v) {
  const FitConfig d;
  v.n_chains = j.value("n_chains", d.n_chains);
  v.burn_in = j.value("burn_in", d.burn_in);
  v.inference_draws = j.value("inference_draws", d.inference_draws);
  v.seed = j.value("seed", d.seed);
  v.breakpoint_bounds.reset();
  if (j.contains("breakpoint_bounds")) {
    const json& b = j.at("breakpoint_bounds");
    if (b.is_string()) {
      if (b.get<std::string>() != "from-data") {
        throw ValidationError("breakpoint_bounds must be \"from-data\" or {low, high}");
      }
    } else if (b.is_array()) {
      v.breakpoint_bounds = BreakpointBounds{b.at(0).get<double>(), b.at(1).get<double>()};
    } else {
      v.breakpoint_bounds = b.get<BreakpointBounds>();
    }
  }
  v.credible_mass = j.value("credible_mass", d.credible_mass);
  v.rhat_threshold = j.value("rhat_threshold", d.rhat_threshold);
  v.lgf_exponent_scale = j.value("lgf_exponent_scale", d.lgf_exponent_scale);
  v.validate();
}

void to_json(json& j, const ParameterSummary& v) {
  j = json{{"name", v.name},          {"mean", v.mean},
           {"std", v.std},            {"ci_low", v.ci_low},
           {"ci_high", v.ci_high},    {"hdi_low", v.hdi_low},
           {"hdi_high", v.hdi_high},  {"rhat", optional_number(v.rhat)},
           {"ess", optional_number(v.ess)}};
}

void from_json(const json& j, ParameterSummary& v) {
  j.at("name").get_to(v.name);
  j.at("mean").get_to(v.mean);
  j.at("std").get_to(v.std);
  j.at("ci_low").get_to(v.ci_low);
  j.at("ci_high").get_to(v.ci_high);
  j.at("hdi_low").get_to(v.hdi_low);
  j.at("hdi_high").get_to(v.hdi_high);
  v.rhat = read_optional(j, "rhat");
  v.ess = read_optional(j, "ess");
  check_summary(v);
}

void to_json(json& j, const DiagnosticReport& v) {
  json rhat = json::object();
  json ess = json::object();
  for (std::size_t i = 0; i < v.names.size(); ++i) {
    rhat[v.names[i]] = optional_number(v.rhat[i]);
    ess[v.names[i]] = optional_number(v.ess[i]);
  }
  j = json{{"names", v.names},
           {"rhat", rhat},
           {"ess", ess},
           {"converged", v.converged},
           {"note", v.note}};
}

void from_json(const json& j, DiagnosticReport& v) {
  j.at("names").get_to(v.names);
  v.rhat.clear();
  v.ess.clear();
  for (const auto& name : v.names) {
    v.rhat.push_back(read_optional(j.at("rhat"), name.c_str()));
    v.ess.push_back(read_optional(j.at("ess"), name.c_str()));
  }
  j.at("converged").get_to(v.converged);
  v.note = j.value("note", std::string());
}

void to_json(json& j, const BreakpointReport& v) {
  j = json{{"model_kind", std::string(to_string(v.model_kind))},
           {"occupancy", v.occupancy},
           {"speed", v.speed}};
  if (v.speed_low) j["speed_low"] = *v.speed_low;
  if (v.speed_high) j["speed_high"] = *v.speed_high;
  if (v.band_width) j["band_width"] = *v.band_width;
}

void from_json(const json& j, BreakpointReport& v) {
  v.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
  j.at("occupancy").get_to(v.occupancy);
  j.at("speed").get_to(v.speed);
  auto opt = [&](const char* key, std::optional<ParameterSummary>& out) {
    if (j.contains(key)) {
      out = j.at(key).get<ParameterSummary>();
    } else {
      out.reset();
    }
  };
  opt("speed_low", v.speed_low);
  opt("speed_high", v.speed_high);
  opt("band_width", v.band_width);
}

json model_params_to_json(const ModelParams& v) {
  json params;
  std::visit([&](const auto& p) { params = p; }, v);
  return json{{"model_kind", std::string(to_string(kind_of(v)))}, {"params", params}};
}

ModelParams model_params_from_json(const json& j) {
  const ModelKind kind = parse_model_kind(j.at("model_kind").get<std::string>());
  if (kind == ModelKind::kLgf) return j.at("params").get<LgfParams>();
  return j.at("params").get<TwoRegimeParams>();
}

json posterior_fit_to_json(const PosteriorFit& fit, bool include_draws) {
  json params = json::object();
  for (const auto& p : fit.params) params[p.name] = p;
  json chains = json::array();
  for (const auto& c : fit.chains) chains.push_back(chain_to_json(c, include_draws));

  json j{{"schema_version", kSchemaVersion},
         {"model_kind", std::string(to_string(fit.model_kind))},
         {"occupancy_breakpoint", fit.breakpoints.occupancy},
         {"speed_breakpoint", fit.breakpoints.speed},
         {"params", params},
         {"diagnostics", fit.diagnostics},
         {"config", fit.config},
         {"prior", fit.prior},
         {"bounds", fit.bounds},
         {"fixed_params", fit.fixed_params},
         {"dataset_digest", fit.dataset_digest},
         {"n_observations", fit.n_observations},
         {"std_convention", "sample standard deviation (divisor N-1)"},
         {"chains", chains},
         {"includes_draws", include_draws}};
  if (fit.breakpoints.speed_low) j["speed_breakpoint_low"] = *fit.breakpoints.speed_low;
  if (fit.breakpoints.speed_high) j["speed_breakpoint_high"] = *fit.breakpoints.speed_high;
  if (fit.breakpoints.band_width) j["band_width"] = *fit.breakpoints.band_width;
  return j;
}

PosteriorFit posterior_fit_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw ValidationError("unsupported fit schema_version");
  }
  PosteriorFit fit;
  fit.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
  const json& params = j.at("params");
  for (const auto name : parameter_names(fit.model_kind)) {
    fit.params.push_back(params.at(std::string(name)).get<ParameterSummary>());
  }
  j.at("diagnostics").get_to(fit.diagnostics);
  fit.breakpoints.model_kind = fit.model_kind;
  j.at("occupancy_breakpoint").get_to(fit.breakpoints.occupancy);
  j.at("speed_breakpoint").get_to(fit.breakpoints.speed);
  if (j.contains("speed_breakpoint_low")) {
    fit.breakpoints.speed_low = j.at("speed_breakpoint_low").get<ParameterSummary>();
    fit.breakpoints.speed_high = j.at("speed_breakpoint_high").get<ParameterSummary>();
    fit.breakpoints.band_width = j.at("band_width").get<ParameterSummary>();
  }
  j.at("config").get_to(fit.config);
  j.at("prior").get_to(fit.prior);
  j.at("bounds").get_to(fit.bounds);
  j.at("fixed_params").get_to(fit.fixed_params);
  j.at("dataset_digest").get_to(fit.dataset_digest);
  j.at("n_observations").get_to(fit.n_observations);
  for (const auto& c : j.at("chains")) fit.chains.push_back(chain_from_json(c));
  return fit;
}

}  // namespace fdbreak
