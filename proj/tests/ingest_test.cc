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

#include "fdbreak/ingest.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles/oracles.h"

namespace fdbreak {
namespace {

using std::chrono::minutes;

constexpr const char* kHeader = "timestamp,lane_id,speed_mph,occupancy_pct,volume\n";

LoadResult parse(const std::string& text, const CsvSchema& schema = {}) {
  std::istringstream in(text);
  return parse_detector_csv(in, schema);
}

Observation at(const char* ts, double speed, double occ = 10.0, int lane = 1) {
  Observation o;
  o.timestamp = *parse_timestamp(ts);
  o.lane_id = lane;
  o.speed = speed;
  o.occupancy = occ;
  return o;
}

TEST(LoadCsv, WellFormedFile) {
  const LoadResult r = parse(std::string(kHeader) +
                             "2018-01-02T07:00,1,55.5,8.25,12\n"
                             "2018-01-02T07:05,1,54,9,\n"
                             "2018-01-02T07:10,1,50,11.5,14\n");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_EQ(r.data_rows, 3u);
  EXPECT_EQ(r.records[0].speed, 55.5);
  EXPECT_EQ(r.records[0].occupancy, 8.25);
  EXPECT_EQ(r.records[0].volume, 12);
  EXPECT_FALSE(r.records[1].volume.has_value());
}

TEST(LoadCsv, OccupancyOutOfRangeRejectsRow) {
  const LoadResult r = parse(std::string(kHeader) +
                             "2018-01-02T07:00,1,55,8,\n"
                             "2018-01-02T07:05,1,54,120,\n"
                             "2018-01-02T07:10,1,50,11,\n");
  EXPECT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].line, 3u);
  EXPECT_EQ(r.rejects[0].reason, "occupancy out of range");
  EXPECT_FALSE(r.warnings.empty());
}

TEST(LoadCsv, OtherRejectReasons) {
  const LoadResult r = parse(std::string(kHeader) +
                             "2018-01-02T07:00,1,-5,8,\n"
                             "not-a-time,1,54,12,\n"
                             "2018-01-02T07:10,1,fast,11,\n"
                             "2018-01-02T07:15,1,50\n");
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.rejects.size(), 4u);
  EXPECT_EQ(r.rejects[0].reason, "speed out of range");
  EXPECT_EQ(r.rejects[1].reason, "unparseable timestamp");
  EXPECT_EQ(r.rejects[2].reason, "unparseable speed");
  EXPECT_EQ(r.rejects[3].reason, "wrong number of fields");
  const std::string csv = rejects_csv(r.rejects);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "line,reason,text");
}

TEST(LoadCsv, HeaderOnlyWarns) {
  const LoadResult r = parse(kHeader);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.rejects.empty());
  ASSERT_FALSE(r.warnings.empty());
}

TEST(LoadCsv, MissingColumnIsSchemaError) {
  EXPECT_THROW(parse("timestamp,lane_id,speed_mph\n2018-01-02T07:00,1,55\n"), CsvSchemaError);
  EXPECT_THROW(parse(""), CsvSchemaError);
}

TEST(LoadCsv, RemappedColumnsAndKmh) {
  CsvSchema schema;
  schema.timestamp = "time";
  schema.speed = "kph";
  schema.occupancy = "occ";
  schema.lane_id = "lane";
  schema.speed_unit = SpeedUnit::kKmh;
  const LoadResult r = parse("occ,lane,kph,time\n10,2,160.9344,2018-01-02 07:00\n", schema);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_NEAR(r.records[0].speed, 100.0, 1e-12);
  EXPECT_EQ(r.records[0].lane_id, 2);
}

TEST(LoadCsv, CountsAlwaysBalance) {
  oracle::Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text = kHeader;
    const int rows = rng.integer(0, 40);
    for (int i = 0; i < rows; ++i) {
      switch (rng.integer(0, 4)) {
        case 0:
          text += "2018-01-02T07:00,1,55,8,\n";
          break;
        case 1:
          text += "2018-01-02T07:00,1,55,180,\n";
          break;
        case 2:
          text += "garbage\n";
          break;
        case 3:
          text += "2018-13-02T07:00,1,55,8,3\n";
          break;
        default:
          text += "2018-01-02T07:00,1,55,8,-4\n";
          break;
      }
    }
    const LoadResult r = parse(text);
    EXPECT_EQ(r.records.size() + r.rejects.size(), static_cast<std::size_t>(rows));
    EXPECT_EQ(r.data_rows, static_cast<std::size_t>(rows));
  }
}

TEST(Filter, PaperWindowsAndWeekdays) {
  // 2018-01-01 is a Monday, 2018-01-02 a Tuesday.
  const std::vector<Observation> records = {
      at("2018-01-02T07:00", 50), at("2018-01-01T07:00", 50), at("2018-01-02T12:00", 50),
      at("2018-01-02T06:00", 50), at("2018-01-02T09:00", 50), at("2018-01-02T18:55", 50),
      at("2018-01-05T07:00", 50), at("2018-01-06T07:00", 50), at("2018-01-03T16:00", 50)};
  const DetectorDataset d = filter_analysis_windows(records, IngestConfig{});
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.observations[0], records[0]);  // Tuesday 07:00 kept
  EXPECT_EQ(d.observations[1], records[3]);  // window start inclusive
  EXPECT_EQ(d.observations[2], records[5]);
  EXPECT_EQ(d.observations[3], records[8]);  // Wednesday afternoon
}

TEST(Filter, Holidays) {
  IngestConfig c;
  c.holiday_dates.insert(std::chrono::local_days{std::chrono::year{2018} / 1 / 2});
  const std::vector<Observation> records = {at("2018-01-02T07:00", 50),
                                            at("2018-01-03T07:00", 50)};
  const DetectorDataset d = filter_analysis_windows(records, c);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.observations[0], records[1]);
}

TEST(Aggregate, FiveEqualSpeeds) {
  std::vector<Observation> records;
  for (int i = 0; i < 5; ++i) {
    records.push_back(at("2018-01-02T07:00", 50, 10 + i));
    records.back().timestamp += minutes(i);
  }
  const DetectorDataset d = aggregate(records, IngestConfig{});
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.observations[0].speed, 50.0);
  EXPECT_EQ(d.observations[0].occupancy, 12.0);
  EXPECT_EQ(format_timestamp(d.observations[0].timestamp), "2018-01-02T07:00");
}

TEST(Aggregate, ArithmeticAndHarmonic) {
  std::vector<Observation> records = {at("2018-01-02T07:01", 40), at("2018-01-02T07:03", 60)};
  records[0].volume = 3;
  records[1].volume = 4;
  IngestConfig c;
  EXPECT_EQ(aggregate(records, c).observations[0].speed, 50.0);
  EXPECT_EQ(aggregate(records, c).observations[0].volume, 7);
  c.speed_aggregation = SpeedAggregation::kHarmonicMean;
  EXPECT_NEAR(aggregate(records, c).observations[0].speed, 48.0, 1e-12);
  records[1].volume.reset();
  EXPECT_FALSE(aggregate(records, c).observations[0].volume.has_value());
}

TEST(Aggregate, IdempotentAtNativeCadence) {
  std::vector<Observation> records;
  oracle::Rng rng(42);
  for (int i = 0; i < 60; ++i) {
    records.push_back(at("2018-01-02T06:00", rng.uniform(10, 70), rng.uniform(1, 40)));
    records.back().timestamp += minutes(5 * i);
    records.back().volume = rng.integer(0, 30);
  }
  const DetectorDataset once = aggregate(records, IngestConfig{});
  ASSERT_EQ(once.observations, records);
  EXPECT_EQ(aggregate(once.observations, IngestConfig{}).observations, once.observations);
}

TEST(Aggregate, MixedLanesRejected) {
  const std::vector<Observation> records = {at("2018-01-02T07:00", 50, 10, 1),
                                            at("2018-01-02T07:00", 50, 10, 2)};
  EXPECT_THROW(aggregate(records, IngestConfig{}), MixedLanesError);
  EXPECT_EQ(lanes_present(records), (std::vector<int>{1, 2}));
  EXPECT_EQ(select_lane(records, 2).size(), 1u);
}

TEST(IngestProperties, FilterAndAggregateCommute) {
  oracle::Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    IngestConfig c;
    c.aggregation_minutes = std::vector<int>{5, 10, 15, 30}[rng.integer(0, 3)];
    std::vector<Observation> records;
    const int n = rng.integer(1, 400);
    for (int i = 0; i < n; ++i) {
      Observation o = at("2018-01-01T00:00", rng.uniform(5, 75), rng.uniform(0, 50));
      o.timestamp += minutes(rng.integer(0, 7 * 24 * 60 - 1));
      records.push_back(o);
    }
    std::sort(records.begin(), records.end(),
              [](const Observation& a, const Observation& b) { return a.timestamp < b.timestamp; });
    const DetectorDataset fa = aggregate(filter_analysis_windows(records, c).observations, c);
    const DetectorDataset af = filter_analysis_windows(aggregate(records, c).observations, c);
    EXPECT_EQ(fa.observations, af.observations);

    const DetectorDataset agg = aggregate(records, c);
    EXPECT_LE(agg.size(), records.size());
    for (const auto& o : agg.observations) {
      const auto since_midnight =
          o.timestamp - std::chrono::floor<std::chrono::days>(o.timestamp);
      EXPECT_EQ(since_midnight.count() % c.aggregation_minutes, 0);
    }
  }
}

TEST(IngestConfig, Validation) {
  IngestConfig c;
  EXPECT_NO_THROW(c.validate());
  c.aggregation_minutes = 7;
  EXPECT_THROW(c.validate(), ValidationError);
  c = IngestConfig{};
  c.time_windows = {{minutes(360), minutes(540)}, {minutes(500), minutes(600)}};
  EXPECT_THROW(c.validate(), ValidationError);
  c.time_windows = {{minutes(540), minutes(360)}};
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Parsers, WindowsWeekdaysAggregation) {
  const auto w = parse_time_windows("06:00-09:00,15:00-19:00");
  EXPECT_EQ(w, IngestConfig{}.time_windows);
  EXPECT_THROW(parse_time_windows("6-9"), ValidationError);
  EXPECT_EQ(parse_weekdays("Sat,sunday,1,Fri"), (std::set<unsigned>{0, 1, 5, 6}));
  EXPECT_THROW(parse_weekdays("Funday"), ValidationError);
  EXPECT_EQ(parse_speed_aggregation("harmonic"), SpeedAggregation::kHarmonicMean);
  EXPECT_EQ(to_string(SpeedAggregation::kArithmeticMean), "arithmetic_mean");
}

TEST(DatasetCsv, RoundTripsThroughFile) {
  DetectorDataset d;
  d.observations = {at("2018-01-02T07:00", 55.123456789, 8.1), at("2018-01-02T07:05", -0.5, 30)};
  d.observations[0].volume = 9;
  const auto dir = std::filesystem::temp_directory_path() / "fdbreak_ingest_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "round.csv";
  {
    std::ofstream out(path);
    out << dataset_csv(d);
  }
  const DetectorDataset back = read_dataset_csv(path);
  EXPECT_EQ(back.observations, d.observations);
  EXPECT_EQ(back.site_label, "round");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fdbreak
