// Copyright 2026 The mmdlstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace mmdlstm::cli {

/// Runs one invocation; args[0] is the program name. Returns the process
/// exit code: 0 on success, the ErrorKind value for library errors, 1 for
/// other failures and CLI11's code for bad command lines.
int run_cli(const std::vector<std::string>& args);

}  // namespace mmdlstm::cli
