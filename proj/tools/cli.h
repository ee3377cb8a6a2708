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

// The fdbreak command line: ingest, fit, compare and simulate.

#ifndef FDBREAK_TOOLS_CLI_H_
#define FDBREAK_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace fdbreak::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInputError = 2,
  kNotConverged = 3,
};

// Runs one command. `args` excludes the program name. Messages go to `out`
// and `err`; results go to files under --output.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdbreak::cli

#endif  // FDBREAK_TOOLS_CLI_H_
