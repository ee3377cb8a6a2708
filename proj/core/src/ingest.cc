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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "fdbreak/digest.h"

namespace fdbreak {
namespace {

constexpr double kKmPerMile = 1.609344;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

template <typename Int>
std::optional<Int> parse_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::chrono::minutes parse_clock(std::string_view s) {
  s = trim(s);
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) throw ValidationError("bad clock time '" + std::string(s) + "'");
  const auto h = parse_integer<int>(s.substr(0, colon));
  const auto m = parse_integer<int>(s.substr(colon + 1));
  if (!h || !m || *h < 0 || *h > 24 || *m < 0 || *m > 59 || (*h == 24 && *m != 0)) {
    throw ValidationError("bad clock time '" + std::string(s) + "'");
  }
  return std::chrono::hours{*h} + std::chrono::minutes{*m};
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

LoadResult parse_detector_csv(std::istream& in, const CsvSchema& schema) {
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw CsvSchemaError("missing header row");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv(line);
  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto require_column = [&](const std::string& name) {
    const auto idx = find_column(name);
    if (!idx) throw CsvSchemaError("missing required column '" + name + "'");
    return *idx;
  };
  const std::size_t c_ts = require_column(schema.timestamp);
  const std::size_t c_lane = require_column(schema.lane_id);
  const std::size_t c_speed = require_column(schema.speed);
  const std::size_t c_occ = require_column(schema.occupancy);
  const auto c_vol = find_column(schema.volume);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++result.data_rows;
    auto reject = [&](std::string reason) {
      result.rejects.push_back({line_no, std::move(reason), line});
    };
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      reject("wrong number of fields");
      continue;
    }
    Observation o;
    const auto ts = parse_timestamp(trim(f[c_ts]));
    if (!ts) {
      reject("unparseable timestamp");
      continue;
    }
    o.timestamp = *ts;
    const auto lane = parse_integer<int>(f[c_lane]);
    if (!lane) {
      reject("unparseable lane_id");
      continue;
    }
    o.lane_id = *lane;
    const auto speed = parse_double(f[c_speed]);
    const auto occ = parse_double(f[c_occ]);
    if (!speed) {
      reject("unparseable speed");
      continue;
    }
    if (!occ) {
      reject("unparseable occupancy");
      continue;
    }
    o.speed = schema.speed_unit == SpeedUnit::kKmh ? *speed / kKmPerMile : *speed;
    o.occupancy = *occ;
    if (c_vol && !trim(f[*c_vol]).empty()) {
      const auto vol = parse_integer<std::int64_t>(f[*c_vol]);
      if (!vol) {
        reject("unparseable volume");
        continue;
      }
      o.volume = *vol;
    }
    if (!std::isfinite(o.occupancy) || o.occupancy < 0.0 || o.occupancy > 100.0) {
      reject("occupancy out of range");
      continue;
    }
    if (!std::isfinite(o.speed) || (o.speed < 0.0 && !schema.allow_negative_speed)) {
      reject("speed out of range");
      continue;
    }
    if (o.volume && *o.volume < 0) {
      reject("volume out of range");
      continue;
    }
    result.records.push_back(o);
  }
  if (result.data_rows == 0) result.warnings.push_back("file has a header but no data rows");
  if (!result.rejects.empty()) {
    result.warnings.push_back(std::to_string(result.rejects.size()) + " row(s) rejected");
  }
  return result;
}

LoadResult load_detector_csv(const std::filesystem::path& path,
                             const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw CsvSchemaError("cannot open " + path.string());
  return parse_detector_csv(in, schema);
}

void IngestConfig::validate() const {
  if (aggregation_minutes <= 0 || 60 % aggregation_minutes != 0) {
    throw ValidationError("aggregation_minutes must divide 60");
  }
  std::vector<TimeWindow> sorted = time_windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const TimeWindow& a, const TimeWindow& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].start < sorted[i].end)) throw ValidationError("time window needs start < end");
    if (sorted[i].start < std::chrono::minutes{0} || sorted[i].end > std::chrono::hours{24}) {
      throw ValidationError("time window outside the day");
    }
    if (i > 0 && sorted[i].start < sorted[i - 1].end) {
      throw ValidationError("time windows overlap");
    }
  }
  for (unsigned d : excluded_weekdays) {
    if (d > 6) throw ValidationError("weekday out of range");
  }
}

std::vector<TimeWindow> parse_time_windows(std::string_view text) {
  std::vector<TimeWindow> out;
  if (trim(text).empty()) return out;
  for (auto part : split_on(text, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) throw ValidationError("bad time window '" + std::string(part) + "'");
    out.push_back({parse_clock(part.substr(0, dash)), parse_clock(part.substr(dash + 1))});
  }
  return out;
}

std::set<unsigned> parse_weekdays(std::string_view text) {
  static const std::map<std::string, unsigned> kNames = {
      {"sun", 0}, {"sunday", 0},   {"mon", 1}, {"monday", 1}, {"tue", 2},
      {"tuesday", 2}, {"wed", 3},  {"wednesday", 3}, {"thu", 4},
      {"thursday", 4}, {"fri", 5}, {"friday", 5}, {"sat", 6}, {"saturday", 6}};
  std::set<unsigned> out;
  if (trim(text).empty()) return out;
  for (auto part : split_on(text, ',')) {
    if (const auto n = parse_integer<unsigned>(part); n && *n <= 6) {
      out.insert(*n);
      continue;
    }
    const auto it = kNames.find(lower(part));
    if (it == kNames.end()) throw ValidationError("unknown weekday '" + std::string(part) + "'");
    out.insert(it->second);
  }
  return out;
}

SpeedAggregation parse_speed_aggregation(std::string_view text) {
  const std::string t = lower(text);
  if (t == "arithmetic" || t == "arithmetic_mean") return SpeedAggregation::kArithmeticMean;
  if (t == "harmonic" || t == "harmonic_mean") return SpeedAggregation::kHarmonicMean;
  throw ValidationError("unknown speed aggregation '" + std::string(text) + "'");
}

std::string_view to_string(SpeedAggregation a) {
  return a == SpeedAggregation::kHarmonicMean ? "harmonic_mean" : "arithmetic_mean";
}

std::set<std::chrono::local_days> load_holidays(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvSchemaError("cannot open holiday file " + path.string());
  std::set<std::chrono::local_days> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto ts = parse_timestamp(std::string(t) + "T00:00");
    if (!ts) throw ValidationError("bad holiday date '" + std::string(t) + "'");
    out.insert(std::chrono::floor<std::chrono::days>(*ts));
  }
  return out;
}

DetectorDataset filter_analysis_windows(std::span<const Observation> records,
                                        const IngestConfig& config) {
  using namespace std::chrono;
  config.validate();
  DetectorDataset out;
  for (const auto& r : records) {
    const local_days day = floor<days>(r.timestamp);
    const minutes clock = r.timestamp - day;
    if (config.excluded_weekdays.contains(weekday{day}.c_encoding())) continue;
    if (config.holiday_dates.contains(day)) continue;
    const bool in_window = std::any_of(
        config.time_windows.begin(), config.time_windows.end(),
        [&](const TimeWindow& w) { return clock >= w.start && clock < w.end; });
    if (in_window) out.observations.push_back(r);
  }
  return out;
}

DetectorDataset aggregate(std::span<const Observation> records,
                          const IngestConfig& config) {
  using namespace std::chrono;
  config.validate();
  DetectorDataset out;
  if (records.empty()) return out;
  for (const auto& r : records) {
    if (r.lane_id != records.front().lane_id) {
      throw MixedLanesError("aggregate needs a single lane; select a lane first");
    }
  }
  const minutes width{config.aggregation_minutes};
  struct Bucket {
    double speed_sum = 0.0;
    double inverse_speed_sum = 0.0;
    bool zero_speed = false;
    double occupancy_sum = 0.0;
    std::int64_t volume_sum = 0;
    bool volume_complete = true;
    std::size_t count = 0;
  };
  std::map<Timestamp, Bucket> buckets;
  for (const auto& r : records) {
    const local_days day = floor<days>(r.timestamp);
    const minutes clock = r.timestamp - day;
    const Timestamp start = day + (clock / width) * width;
    Bucket& b = buckets[start];
    b.speed_sum += r.speed;
    if (r.speed > 0.0) {
      b.inverse_speed_sum += 1.0 / r.speed;
    } else {
      b.zero_speed = true;
    }
    b.occupancy_sum += r.occupancy;
    if (r.volume) {
      b.volume_sum += *r.volume;
    } else {
      b.volume_complete = false;
    }
    ++b.count;
  }
  for (const auto& [start, b] : buckets) {
    const double n = static_cast<double>(b.count);
    Observation o;
    o.timestamp = start;
    o.lane_id = records.front().lane_id;
    o.occupancy = b.occupancy_sum / n;
    if (config.speed_aggregation == SpeedAggregation::kHarmonicMean) {
      o.speed = b.zero_speed ? 0.0 : n / b.inverse_speed_sum;
    } else {
      o.speed = b.speed_sum / n;
    }
    if (b.volume_complete) o.volume = b.volume_sum;
    out.observations.push_back(o);
  }
  return out;
}

std::vector<int> lanes_present(std::span<const Observation> records) {
  std::set<int> lanes;
  for (const auto& r : records) lanes.insert(r.lane_id);
  return {lanes.begin(), lanes.end()};
}

std::vector<Observation> select_lane(std::span<const Observation> records, int lane_id) {
  std::vector<Observation> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const Observation& o) { return o.lane_id == lane_id; });
  return out;
}

std::string dataset_csv(const DetectorDataset& data) {
  std::string out = "timestamp,lane_id,speed_mph,occupancy_pct,volume\n";
  for (const auto& o : data.observations) {
    out += format_timestamp(o.timestamp);
    out += ',';
    out += std::to_string(o.lane_id);
    out += ',';
    out += format_double(o.speed);
    out += ',';
    out += format_double(o.occupancy);
    out += ',';
    if (o.volume) out += std::to_string(*o.volume);
    out += '\n';
  }
  return out;
}

DetectorDataset read_dataset_csv(const std::filesystem::path& path,
                                 const CsvSchema& schema) {
  CsvSchema relaxed = schema;
  relaxed.allow_negative_speed = true;
  LoadResult r = load_detector_csv(path, relaxed);
  if (!r.rejects.empty()) {
    const auto& first = r.rejects.front();
    throw CsvSchemaError(path.string() + ":" + std::to_string(first.line) + ": " + first.reason);
  }
  DetectorDataset d;
  d.observations = std::move(r.records);
  d.site_label = path.stem().string();
  return d;
}

std::string rejects_csv(std::span<const RejectedRow> rejects) {
  std::string out = "line,reason,text\n";
  for (const auto& r : rejects) {
    std::string text = r.text;
    std::string escaped;
    for (char c : text) {
      if (c == '"') escaped += '"';
      escaped += c;
    }
    out += std::to_string(r.line) + ',' + r.reason + ",\"" + escaped + "\"\n";
  }
  return out;
}

}  // namespace fdbreak
