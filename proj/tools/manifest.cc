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

#include "manifest.h"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fdbreak/digest.h"
#include "fdbreak/json.h"

namespace fdbreak::cli {

using nlohmann::json;

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.push_back({path.string(), sha256_file_hex(path)});
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs.push_back({path.string(), sha256_file_hex(path)});
}

json RunManifest::to_json() const {
  auto files = [](const std::vector<FileDigest>& v) {
    json a = json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  return json{{"schema_version", kSchemaVersion},
              {"command", command},
              {"arguments", arguments},
              {"resolved_config", resolved_config},
              {"inputs", files(inputs)},
              {"outputs", files(outputs)},
              {"tool_version", tool_version},
              {"started_at", started_at},
              {"duration_seconds", duration_seconds}};
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto day = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{now - day};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace fdbreak::cli
