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

#ifndef TAGOOD_IO_HPP_
#define TAGOOD_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace tagood {

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

// Hex SHA-256 digests for fingerprints and manifests.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::filesystem::path& path);

// Exclusive lock on an output directory, held for the object's lifetime.
// Creates the directory if missing. Throws if another run holds the lock.
class OutputDirLock {
 public:
  explicit OutputDirLock(const std::filesystem::path& dir);
  ~OutputDirLock();
  OutputDirLock(const OutputDirLock&) = delete;
  OutputDirLock& operator=(const OutputDirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace tagood

#endif  // TAGOOD_IO_HPP_
