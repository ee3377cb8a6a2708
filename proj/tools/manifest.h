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

#ifndef FDBREAK_TOOLS_MANIFEST_H_
#define FDBREAK_TOOLS_MANIFEST_H_

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fdbreak::cli {

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Reproducibility record for one command. Everything except `started_at`
// and `duration_seconds` is a function of the inputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json resolved_config = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string tool_version;
  std::string started_at;  // UTC, ISO 8601
  double duration_seconds = 0.0;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

std::string utc_now_iso8601();

// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fdbreak::cli

#endif  // FDBREAK_TOOLS_MANIFEST_H_
