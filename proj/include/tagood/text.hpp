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

#ifndef TAGOOD_TEXT_HPP_
#define TAGOOD_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace tagood {

std::string Trim(std::string_view s);
std::string CollapseWhitespace(std::string_view s);
// ASCII case fold; bytes >= 0x80 pass through.
std::string CaseFold(std::string_view s);

// Comparison key for label names: trimmed, internal whitespace runs collapsed
// to one space, case-folded.
std::string NameKey(std::string_view s);

// Cleans one LLM answer line: surrounding whitespace, surrounding quotes and
// markdown emphasis, trailing punctuation. Casing is preserved.
std::string CleanResponseLine(std::string_view s);

bool IsValidUtf8(std::string_view s);

std::vector<std::string> SplitLines(std::string_view s);

// Shortest decimal representation that round-trips the double.
std::string FormatDouble(double value);

}  // namespace tagood

#endif  // TAGOOD_TEXT_HPP_
