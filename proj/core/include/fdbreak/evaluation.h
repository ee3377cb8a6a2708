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

// Goodness of fit: RMSE, speed-binned RMSE, posterior mean curves and the
// two-model comparison report.

#ifndef FDBREAK_EVALUATION_H_
#define FDBREAK_EVALUATION_H_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdbreak/domain.h"

namespace fdbreak {

class DatasetMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// sqrt(mean((observed - predicted)^2)). Throws std::invalid_argument on empty
// or mismatched input.
double rmse(std::span<const double> observed, std::span<const double> predicted);

struct PredictOptions {
  // Evaluate the curve at the posterior-mean parameters instead of averaging
  // the curve over draws.
  bool plug_in = false;
  bool allow_nonconverged = false;
};

struct CurvePoint {
  double occupancy = 0.0;
  double mean = 0.0;
  double band_low = 0.0;
  double band_high = 0.0;
};

// Mean speed at each grid point, averaged over every retained draw, with the
// equal-tailed band at fit.config.credible_mass. Throws when the fit has no
// draws, the grid is empty, or the fit did not converge (unless allowed).
std::vector<CurvePoint> predict_mean_curve(const PosteriorFit& fit,
                                           std::span<const double> occupancy_grid,
                                           const PredictOptions& options = {});

// n evenly spaced points over [low, high].
std::vector<double> linear_grid(double low, double high, std::size_t n);

struct SpeedBin {
  double low = 0.0;  // inclusive
  double high = 0.0;  // exclusive
  double rmse = 0.0;
  std::size_t count = 0;
};

// Groups observations by observed speed into [k w, (k + 1) w) and reports the
// RMSE against the posterior-mean prediction per nonempty bin.
std::vector<SpeedBin> binned_rmse(const DetectorDataset& data,
                                  const PosteriorFit& fit, double bin_width,
                                  const PredictOptions& options = {});

// Same, from explicit predictions.
std::vector<SpeedBin> binned_rmse(std::span<const double> observed,
                                  std::span<const double> predicted,
                                  double bin_width);

struct ModelComparison {
  std::string label;
  ModelKind model_kind = ModelKind::kLgf;
  double overall_rmse = 0.0;
  std::vector<SpeedBin> bins;
  double mean_bin_rmse = 0.0;
  double std_bin_rmse = 0.0;  // sample std across bins; 0 for a single bin
  BreakpointReport breakpoints;
};

struct BinWinner {
  double low = 0.0;
  double high = 0.0;
  std::string winner;  // column label, or "tie"
};

struct ComparisonReport {
  double bin_width = 10.0;
  std::size_t n_observations = 0;
  std::string dataset_digest;
  ModelComparison lgf;
  ModelComparison two_regime;
  std::vector<BinWinner> winners;
};

// Builds the report for the fits in the "lgf" and "two_regime" columns.
// Throws DatasetMismatch when either fit was computed on different data.
ComparisonReport compare(const DetectorDataset& data, const PosteriorFit& fit_lgf,
                         const PosteriorFit& fit_two_regime, double bin_width,
                         const PredictOptions& options = {});

nlohmann::json comparison_to_json(const ComparisonReport& report);

// Columns: bin_low, bin_high, count, rmse_lgf, rmse_two_regime.
std::string binned_rmse_csv(const ComparisonReport& report);
// Columns: occupancy, mean_speed, band_low, band_high.
std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace fdbreak

#endif  // FDBREAK_EVALUATION_H_
