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

#ifndef FDBREAK_DIGEST_H_
#define FDBREAK_DIGEST_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace fdbreak {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace fdbreak

#endif  // FDBREAK_DIGEST_H_
