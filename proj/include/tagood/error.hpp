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

#ifndef TAGOOD_ERROR_HPP_
#define TAGOOD_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tagood {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kInput = 2,     // malformed file, schema violation, bad argument value
  kConfig = 3,    // missing credentials or inconsistent configuration
  kRegime = 4,    // scorer not valid for the active label regime
  kExternal = 5,  // LLM endpoint or external command failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error InputError(const std::string& what) { return Error(ErrorKind::kInput, what); }
inline Error ConfigError(const std::string& what) { return Error(ErrorKind::kConfig, what); }
inline Error RegimeError(const std::string& what) { return Error(ErrorKind::kRegime, what); }
inline Error ExternalError(const std::string& what) { return Error(ErrorKind::kExternal, what); }

}  // namespace tagood

#endif  // TAGOOD_ERROR_HPP_
