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

// Seeded synthetic data from known parameters, and a brute-force grid
// posterior used to check the sampler.

#ifndef FDBREAK_SYNTH_H_
#define FDBREAK_SYNTH_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdbreak/domain.h"

namespace fdbreak {

struct OccupancyRange {
  double low = 1.0;
  double high = 35.0;

  friend bool operator==(const OccupancyRange&, const OccupancyRange&) = default;
};

struct SynthSpec {
  // Noise terms may be zero here, unlike in a fit.
  ModelParams truth = LgfParams{20.0, 65.0, 15.0, 3.0};
  std::size_t n = 100;
  // Uniform draws over a range, or an explicit list of length n.
  std::variant<OccupancyRange, std::vector<double>> occupancy = OccupancyRange{};
  std::uint64_t seed = 0;
  // Redraw negative speeds (a truncated normal) instead of keeping them.
  bool truncate_negative = false;

  void validate() const;
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

// Lane 1, 5-minute timestamps from 2018-01-02T06:00, site label "synthetic".
// Identical specs give identical datasets.
DetectorDataset generate(const SynthSpec& spec);

void to_json(nlohmann::json& j, const SynthSpec& v);
void from_json(const nlohmann::json& j, SynthSpec& v);

struct GridAxis {
  std::string parameter;  // model parameter name, e.g. "lambda"
  double low = 0.0;
  double high = 1.0;
  std::size_t points = 101;
};

// Normalized posterior density on a grid. `density` is row-major with the
// first axis outermost and integrates to 1 under the trapezoid rule.
struct GridDensity {
  std::vector<GridAxis> axes;
  std::vector<double> density;

  std::vector<double> coordinates(std::size_t axis) const;
  double at(std::size_t i, std::size_t j = 0) const;
  // Trapezoid-integrated marginal along `axis`.
  std::vector<double> marginal(std::size_t axis) const;
};

class GridError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Evaluates exp(log_posterior) over one or two parameters, holding the rest
// at their values in `fixed`. Each axis needs at least 100 points. Throws
// GridError when every grid point has zero posterior density.
GridDensity grid_posterior_oracle(const DetectorDataset& data,
                                  const PriorSpec& prior,
                                  const BreakpointBounds& bounds,
                                  const ModelParams& fixed,
                                  std::span<const GridAxis> axes);

}  // namespace fdbreak

#endif  // FDBREAK_SYNTH_H_
