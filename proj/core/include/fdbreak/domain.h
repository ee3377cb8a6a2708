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

// Core value types shared by every fdbreak module.
//
// Units are fixed throughout the library: occupancy is a percentage in
// [0, 100] and speed is in miles per hour. Every type with an invariant has a
// validate() member that throws ValidationError; all ingress points (JSON,
// CSV, fit entry points) call it.

#ifndef FDBREAK_DOMAIN_H_
#define FDBREAK_DOMAIN_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fdbreak {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Local wall-clock time at minute resolution.
using Timestamp = std::chrono::local_time<std::chrono::minutes>;

// Formats as "YYYY-MM-DDTHH:MM".
std::string format_timestamp(Timestamp t);

// Accepts "YYYY-MM-DDTHH:MM", an optional ":SS" suffix (seconds must be 00),
// and a space instead of 'T'. Returns nullopt on anything else.
std::optional<Timestamp> parse_timestamp(std::string_view text);

struct Observation {
  Timestamp timestamp{};
  int lane_id = 0;
  double occupancy = 0.0;  // percent
  double speed = 0.0;      // mph
  std::optional<std::int64_t> volume;

  void validate() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct DetectorDataset {
  std::vector<Observation> observations;
  std::string site_label;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
  bool single_lane() const;
  std::vector<double> occupancies() const;
  std::vector<double> speeds() const;

  // Checks every observation; does not require n >= 1 (see require_fittable).
  void validate() const;
  // What the models need: n >= 1, a single lane, occupancy in [0, 100] and
  // finite speeds. Negative speeds pass here because synthetic draws from
  // the Gaussian models may produce them.
  void require_fittable() const;

  friend bool operator==(const DetectorDataset&,
                         const DetectorDataset&) = default;
};

// Hex SHA-256 of the dataset's canonical CSV rendering. Used to tie fits and
// comparison reports to the data they were computed from.
std::string dataset_digest(const DetectorDataset& data);

enum class ModelKind { kLgf, kTwoRegime };

std::string_view to_string(ModelKind kind);
// Accepts "lgf" and "two-regime" (also "two_regime").
ModelKind parse_model_kind(std::string_view text);

// Parameter order used for draw matrices: beta10, beta11, beta20, beta21,
// lambda, sigma1, sigma2.
struct TwoRegimeParams {
  double beta10 = 0.0;
  double beta11 = 0.0;
  double beta20 = 0.0;
  double beta21 = 0.0;
  double lambda = 0.0;  // occupancy percent
  double sigma1 = 1.0;
  double sigma2 = 1.0;

  void validate() const;
  friend bool operator==(const TwoRegimeParams&,
                         const TwoRegimeParams&) = default;
};

// Parameter order used for draw matrices: s_min, s_free, lambda, sigma.
// exponent_scale divides (x - lambda) in the logistic exponent; it is a fixed
// model setting, never sampled, and 1 reproduces the four-parameter curve.
struct LgfParams {
  double s_min = 0.0;
  double s_free = 0.0;
  double lambda = 0.0;  // occupancy percent
  double sigma = 1.0;
  double exponent_scale = 1.0;

  void validate() const;
  friend bool operator==(const LgfParams&, const LgfParams&) = default;
};

using ModelParams = std::variant<LgfParams, TwoRegimeParams>;

ModelKind kind_of(const ModelParams& params);
void validate(const ModelParams& params);

struct BreakpointBounds {
  double low = 0.0;
  double high = 100.0;

  void validate() const;
  bool contains(double v) const { return v >= low && v <= high; }
  friend bool operator==(const BreakpointBounds&,
                         const BreakpointBounds&) = default;
};

enum class BreakpointPrior {
  kModelDefault,  // uniform over bounds (two-regime), normal (LGF)
  kUniform,
  kNormal,
};

std::string_view to_string(BreakpointPrior prior);
BreakpointPrior parse_breakpoint_prior(std::string_view text);

struct PriorSpec {
  double coefficient_scale = 10.0;  // sd of N(0, sd^2) on coefficients
  double noise_scale = 5.0;         // half-normal scale on sigma terms
  BreakpointPrior breakpoint_prior = BreakpointPrior::kModelDefault;
  double breakpoint_mean = 0.0;    // used by the normal breakpoint prior
  double breakpoint_scale = 10.0;  // used by the normal breakpoint prior

  void validate() const;
  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

struct FitConfig {
  int n_chains = 4;
  int burn_in = 25000;
  int inference_draws = 25000;
  std::uint64_t seed = 0;
  // nullopt means "from-data": the observed occupancy range.
  std::optional<BreakpointBounds> breakpoint_bounds;
  double credible_mass = 0.95;
  double rhat_threshold = 1.05;
  double lgf_exponent_scale = 1.0;

  void validate() const;
  BreakpointBounds resolve_bounds(const DetectorDataset& data) const;

  // Reduced draw counts for desk-scale runs.
  static FitConfig fast();

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

// Retained draws of one chain, row-major (draw x parameter).
struct ChainSamples {
  int chain_index = 0;
  std::uint64_t seed = 0;
  std::size_t n_params = 0;
  std::vector<double> draws;
  double acceptance_rate = 0.0;
  // Iterations after burn-in whose proposal scales differed from the values
  // frozen at the end of burn-in. Always zero for a correct sampler.
  std::size_t post_burn_in_adaptations = 0;

  std::size_t n_draws() const { return n_params == 0 ? 0 : draws.size() / n_params; }
  double at(std::size_t draw, std::size_t param) const {
    return draws[draw * n_params + param];
  }
  std::span<const double> row(std::size_t draw) const {
    return {draws.data() + draw * n_params, n_params};
  }
  std::vector<double> column(std::size_t param) const;

  friend bool operator==(const ChainSamples&, const ChainSamples&) = default;
};

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, divisor N - 1
  double ci_low = 0.0;
  double ci_high = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  std::optional<double> rhat;
  std::optional<double> ess;

  friend bool operator==(const ParameterSummary&,
                         const ParameterSummary&) = default;
};

struct DiagnosticReport {
  std::vector<std::string> names;
  std::vector<std::optional<double>> rhat;
  std::vector<std::optional<double>> ess;
  bool converged = false;
  std::string note;

  friend bool operator==(const DiagnosticReport&,
                         const DiagnosticReport&) = default;
};

// Posterior summaries of the derived breakpoint quantities. For LGF only
// occupancy and speed are set. For the two-regime model speed is the midpoint
// of the band, and low/high/band_width are set.
struct BreakpointReport {
  ModelKind model_kind = ModelKind::kLgf;
  ParameterSummary occupancy;
  ParameterSummary speed;
  std::optional<ParameterSummary> speed_low;
  std::optional<ParameterSummary> speed_high;
  std::optional<ParameterSummary> band_width;

  friend bool operator==(const BreakpointReport&,
                         const BreakpointReport&) = default;
};

struct PosteriorFit {
  ModelKind model_kind = ModelKind::kLgf;
  std::vector<ParameterSummary> params;
  DiagnosticReport diagnostics;
  BreakpointReport breakpoints;
  std::vector<ChainSamples> chains;
  FitConfig config;
  PriorSpec prior;
  BreakpointBounds bounds;
  // Parameters held fixed during sampling (index into the model order).
  std::vector<std::size_t> fixed_params;
  std::string dataset_digest;
  std::size_t n_observations = 0;

  bool has_draws() const;
  const ParameterSummary& param(std::string_view name) const;

  friend bool operator==(const PosteriorFit&, const PosteriorFit&) = default;
};

}  // namespace fdbreak

#endif  // FDBREAK_DOMAIN_H_
