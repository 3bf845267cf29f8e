/*
 * Copyright 2026 The tagood Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAGOOD_TOOLS_CLI_HPP_
#define TAGOOD_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace tagood::cli {

// Runs one subcommand. `args` excludes the program name. Returns the process
// exit code: 0 success, 2 input, 3 configuration, 4 regime, 5 external.
int Run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

// Adds `--config` JSON entries as flags for every option the command line does
// not already set, so flags win over the file and the file over defaults.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args);

}  // namespace tagood::cli

#endif  // TAGOOD_TOOLS_CLI_HPP_
