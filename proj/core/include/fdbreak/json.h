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

// nlohmann::json bindings for the domain types. Field names are snake_case
// and match the struct members. Every from_json validates the result.

#ifndef FDBREAK_JSON_H_
#define FDBREAK_JSON_H_

#include <nlohmann/json.hpp>

#include "fdbreak/domain.h"

namespace fdbreak {

inline constexpr int kSchemaVersion = 1;

void to_json(nlohmann::json& j, const Observation& v);
void from_json(const nlohmann::json& j, Observation& v);
void to_json(nlohmann::json& j, const DetectorDataset& v);
void from_json(const nlohmann::json& j, DetectorDataset& v);
void to_json(nlohmann::json& j, const TwoRegimeParams& v);
void from_json(const nlohmann::json& j, TwoRegimeParams& v);
void to_json(nlohmann::json& j, const LgfParams& v);
void from_json(const nlohmann::json& j, LgfParams& v);
void to_json(nlohmann::json& j, const BreakpointBounds& v);
void from_json(const nlohmann::json& j, BreakpointBounds& v);
void to_json(nlohmann::json& j, const PriorSpec& v);
void from_json(const nlohmann::json& j, PriorSpec& v);
void to_json(nlohmann::json& j, const FitConfig& v);
void from_json(const nlohmann::json& j, FitConfig& v);
void to_json(nlohmann::json& j, const ParameterSummary& v);
void from_json(const nlohmann::json& j, ParameterSummary& v);
void to_json(nlohmann::json& j, const DiagnosticReport& v);
void from_json(const nlohmann::json& j, DiagnosticReport& v);
void to_json(nlohmann::json& j, const BreakpointReport& v);
void from_json(const nlohmann::json& j, BreakpointReport& v);

// Tagged with "model_kind"; the parameters sit under "params".
nlohmann::json model_params_to_json(const ModelParams& v);
ModelParams model_params_from_json(const nlohmann::json& j);

// Chain draws are written only when `include_draws` is set. The output also
// carries the table-shaped breakpoint keys (occupancy_breakpoint,
// speed_breakpoint and, for two-regime, speed_breakpoint_low/high and
// band_width) and "schema_version".
nlohmann::json posterior_fit_to_json(const PosteriorFit& fit, bool include_draws);
PosteriorFit posterior_fit_from_json(const nlohmann::json& j);

}  // namespace fdbreak

#endif  // FDBREAK_JSON_H_
