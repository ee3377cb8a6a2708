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

// Detector CSV loading, analysis-window filtering and interval aggregation.
//
// Input CSV: header row, comma delimited, UTF-8. Columns timestamp (ISO 8601
// local), lane_id (integer), speed_mph, occupancy_pct, optional volume. Rows
// that fail validation are reported with their line number, never dropped
// silently.

#ifndef FDBREAK_INGEST_H_
#define FDBREAK_INGEST_H_

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdbreak/domain.h"

namespace fdbreak {

// Raised for problems with the file as a whole (missing column, unreadable
// file), as opposed to per-row rejects.
class CsvSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MixedLanesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SpeedUnit { kMph, kKmh };

struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string lane_id = "lane_id";
  std::string speed = "speed_mph";
  std::string occupancy = "occupancy_pct";
  std::string volume = "volume";  // optional column
  SpeedUnit speed_unit = SpeedUnit::kMph;
  // Dataset CSVs written by `simulate` may hold negative model draws.
  bool allow_negative_speed = false;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
  std::string text;
};

struct LoadResult {
  std::vector<Observation> records;
  std::vector<RejectedRow> rejects;
  std::vector<std::string> warnings;
  std::size_t data_rows = 0;  // == records.size() + rejects.size()
};

LoadResult load_detector_csv(const std::filesystem::path& path,
                             const CsvSchema& schema = {});
LoadResult parse_detector_csv(std::istream& in, const CsvSchema& schema = {});

enum class SpeedAggregation { kArithmeticMean, kHarmonicMean };

struct TimeWindow {
  std::chrono::minutes start{0};  // since midnight, inclusive
  std::chrono::minutes end{0};    // exclusive

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct IngestConfig {
  std::vector<TimeWindow> time_windows = {
      {std::chrono::hours{6}, std::chrono::hours{9}},
      {std::chrono::hours{15}, std::chrono::hours{19}}};
  std::set<unsigned> excluded_weekdays = {0, 1, 5, 6};  // Sun, Mon, Fri, Sat
  std::set<std::chrono::local_days> holiday_dates;
  int aggregation_minutes = 5;
  SpeedAggregation speed_aggregation = SpeedAggregation::kArithmeticMean;

  void validate() const;
};

// "HH:MM-HH:MM[,HH:MM-HH:MM...]"
std::vector<TimeWindow> parse_time_windows(std::string_view text);
// Comma-separated names ("Mon", "monday") or numbers 0-6 with 0 = Sunday.
std::set<unsigned> parse_weekdays(std::string_view text);
SpeedAggregation parse_speed_aggregation(std::string_view text);
std::string_view to_string(SpeedAggregation a);
// One YYYY-MM-DD per line; blank lines and '#' comments ignored.
std::set<std::chrono::local_days> load_holidays(const std::filesystem::path& path);

// Keeps records inside a window ([start, end)), on a non-excluded weekday and
// not on a holiday. Input order is preserved.
DetectorDataset filter_analysis_windows(std::span<const Observation> records,
                                        const IngestConfig& config);

// Buckets a single lane's records into aligned wall-clock intervals. Each
// bucket yields one observation stamped with the bucket start: speed per
// config.speed_aggregation, mean occupancy, summed volume (absent if any
// record lacks it). Output is in time order; empty buckets are omitted.
// Throws MixedLanesError for more than one lane.
DetectorDataset aggregate(std::span<const Observation> records,
                          const IngestConfig& config);

std::vector<int> lanes_present(std::span<const Observation> records);
std::vector<Observation> select_lane(std::span<const Observation> records, int lane_id);

// Writes the input-schema CSV (timestamp, lane_id, speed_mph, occupancy_pct,
// volume) with round-trip exact numbers.
std::string dataset_csv(const DetectorDataset& data);
// Loads a dataset CSV (negative speeds allowed); throws CsvSchemaError if
// any row is rejected.
DetectorDataset read_dataset_csv(const std::filesystem::path& path,
                                 const CsvSchema& schema = {});
std::string rejects_csv(std::span<const RejectedRow> rejects);

}  // namespace fdbreak

#endif  // FDBREAK_INGEST_H_
