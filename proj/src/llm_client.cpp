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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "tagood/error.hpp"
#include "tagood/io.hpp"
#include "tagood/pseudo_ood.hpp"
#include "tagood/random.hpp"
#include "tagood/text.hpp"

// After the Eigen-based headers: <resolv.h> defines a `_res` macro.
#include <httplib.h>

namespace tagood {

using nlohmann::json;

namespace {

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string ReplayKey(const std::string& tag, const std::string& prompt_sha) {
  return tag + '\x1f' + prompt_sha;
}

}  // namespace

void LlmEndpoint::ApplyEnvironment() {
  if (const char* url = std::getenv("LLM_BASE_URL"); url != nullptr && *url != '\0') base_url = url;
  if (const char* key = std::getenv("LLM_API_KEY"); key != nullptr && *key != '\0') api_key = key;
}

void LlmEndpoint::Validate() const {
  if (mode == Mode::kLive && api_key.empty()) {
    throw ConfigError("live LLM mode requires LLM_API_KEY to be set");
  }
  if (temperature < 0.0) throw ConfigError("LLM temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (max_concurrency == 0) throw ConfigError("max_concurrency must be >= 1");
}

// ---------------------------------------------------------------------------

struct HttpLlmClient::State {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix + /v1/chat/completions
  std::mutex rate_mutex;
  std::chrono::steady_clock::time_point next_slot = std::chrono::steady_clock::now();
  std::atomic<std::size_t> calls{0};
};

HttpLlmClient::HttpLlmClient(LlmEndpoint endpoint)
    : endpoint_(std::move(endpoint)), state_(std::make_unique<State>()) {
  endpoint_.Validate();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_.base_url, m, kUrl)) {
    throw ConfigError("malformed LLM base URL \"" + endpoint_.base_url + "\"");
  }
  state_->origin = m[1].str();
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  state_->path = prefix + "/v1/chat/completions";
}

HttpLlmClient::~HttpLlmClient() = default;

std::size_t HttpLlmClient::calls_made() const { return state_->calls.load(); }

std::string HttpLlmClient::Complete(const std::string& tag, const std::string& prompt) {
  const json body = {{"model", endpoint_.model},
                     {"temperature", endpoint_.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  const std::string payload = body.dump();
  std::string last_error;

  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (state_->calls.fetch_add(1) >= endpoint_.max_calls) {
      throw ExternalError("live LLM call budget of " + std::to_string(endpoint_.max_calls) +
                          " calls exhausted at " + tag);
    }
    {
      std::unique_lock lock(state_->rate_mutex);
      const auto now = std::chrono::steady_clock::now();
      const auto slot = std::max(now, state_->next_slot);
      state_->next_slot = slot + endpoint_.min_request_interval;
      lock.unlock();
      std::this_thread::sleep_until(slot);
    }

    httplib::Client cli(state_->origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout).count();
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout).count() % 1000000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    cli.set_bearer_token_auth(endpoint_.api_key);
    auto res = cli.Post(state_->path, payload, "application/json");

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      try {
        const json doc = json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw ExternalError("malformed chat completion response for " + tag + ": " + e.what());
      }
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw ExternalError("LLM endpoint returned HTTP " + std::to_string(res->status) + " for " +
                          tag + ": " + res->body.substr(0, 200));
    }
    if (attempt < endpoint_.max_retries) {
      std::this_thread::sleep_for(endpoint_.backoff_base * (1LL << std::min(attempt, 20)));
    }
  }
  throw ExternalError("LLM request " + tag + " failed after " +
                      std::to_string(endpoint_.max_retries + 1) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------

MockTable MockTable::FromJson(const json& doc) {
  MockTable t;
  try {
    t.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& r : doc.value("rules", json::array())) {
      t.rules.push_back({r.at("keyword").get<std::string>(), r.at("response").get<std::string>()});
    }
    for (const auto& c : doc.value("clusters", json::array())) {
      t.clusters.push_back({c.at("name").get<std::string>(), c.value("description", ""),
                            c.value("members", std::vector<std::string>{})});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("mock table schema violation: ") + e.what());
  }
  return t;
}

json MockTable::ToJson() const {
  json rules_j = json::array();
  for (const auto& r : rules) rules_j.push_back({{"keyword", r.keyword}, {"response", r.response}});
  json clusters_j = json::array();
  for (const auto& c : clusters) {
    clusters_j.push_back({{"name", c.name}, {"description", c.description}, {"members", c.members}});
  }
  return {{"seed", seed}, {"rules", rules_j}, {"clusters", clusters_j}};
}

MockTable MockTable::Load(const std::filesystem::path& path) {
  try {
    return FromJson(json::parse(ReadFile(path)));
  } catch (const json::parse_error& e) {
    throw InputError("mock table parse error: " + std::string(e.what()));
  }
}

std::string MockLlmClient::Complete(const std::string& /*tag*/, const std::string& prompt) {
  if (prompt.starts_with("You are a highly intelligent taxonomy generation system.")) {
    return AnswerClustering(prompt);
  }
  return AnswerAnnotation(prompt);
}

std::string MockLlmClient::AnswerAnnotation(const std::string& prompt) const {
  const auto parsed = ParseAnnotationPrompt(prompt);
  if (!parsed) throw ExternalError("mock LLM: unrecognized prompt");
  const std::string text = CaseFold(parsed->node_text);
  for (const auto& rule : table_.rules) {
    if (text.find(CaseFold(rule.keyword)) != std::string::npos) return rule.response;
  }
  if (parsed->id_names.empty()) throw ExternalError("mock LLM: prompt lists no ID classes");
  const std::uint64_t h = SplitMix64(table_.seed ^ Fnv1a64(parsed->node_text));
  return parsed->id_names[h % parsed->id_names.size()];
}

std::string MockLlmClient::AnswerClustering(const std::string& prompt) const {
  const auto lines = SplitLines(prompt);
  std::vector<std::string> items;
  std::size_t i = 3;  // header, blank, "You are given a list..."
  for (; i < lines.size() && lines[i].starts_with("- "); ++i) items.push_back(lines[i].substr(2));
  static const std::regex kCount(R"(cluster the above things into (\d+) categories)");
  std::smatch m;
  if (!std::regex_search(prompt, m, kCount)) throw ExternalError("mock LLM: unrecognized prompt");
  const std::size_t want = std::stoul(m[1].str());

  std::vector<LabelCluster> out;
  std::set<std::string> assigned;
  for (const auto& c : table_.clusters) {
    bool hit = false;
    for (const auto& member : c.members) {
      for (const auto& item : items) {
        if (NameKey(item) == NameKey(member)) {
          assigned.insert(NameKey(item));
          hit = true;
        }
      }
    }
    if (hit) out.push_back({c.name, c.description});
  }
  std::vector<std::string> leftover;
  for (const auto& item : items) {
    if (!assigned.count(NameKey(item))) leftover.push_back(item);
  }
  if (!leftover.empty()) {
    std::string desc = "Items such as";
    for (std::size_t k = 0; k < leftover.size(); ++k) desc += (k ? ", " : " ") + leftover[k];
    out.push_back({"Other Items", desc + "."});
  }
  while (out.size() > want) out.pop_back();
  for (std::size_t k = out.size(); k < want; ++k) {
    out.push_back({"Group " + std::to_string(k + 1), "A further group of related items."});
  }
  std::string response;
  for (const auto& c : out) response += c.name + ": " + c.description + "\n";
  return response;
}

// ---------------------------------------------------------------------------

ReplayLlmClient::ReplayLlmClient(const std::filesystem::path& transcript) {
  const std::string text = ReadFile(transcript);
  std::size_t line_no = 0;
  for (const auto& line : SplitLines(text)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      if (!rec.contains("response") || rec.at("response").is_null()) continue;
      // Later records win, so an appended re-run supersedes older answers.
      responses_[ReplayKey(rec.at("tag").get<std::string>(),
                           rec.at("prompt_sha256").get<std::string>())] =
          rec.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw InputError("transcript " + transcript.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

std::string ReplayLlmClient::Complete(const std::string& tag, const std::string& prompt) {
  auto it = responses_.find(ReplayKey(tag, Sha256Hex(prompt)));
  if (it == responses_.end()) {
    throw ExternalError("transcript has no recorded response for " + tag);
  }
  return it->second;
}

RecordingLlmClient::RecordingLlmClient(LlmClient& inner, std::filesystem::path path,
                                       std::string model)
    : inner_(inner), path_(std::move(path)), model_(std::move(model)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

std::string RecordingLlmClient::Complete(const std::string& tag, const std::string& prompt) {
  json rec = {{"tag", tag}, {"model", model_}, {"prompt", prompt},
              {"prompt_sha256", Sha256Hex(prompt)}, {"started_at", UtcTimestamp()}};
  std::optional<std::string> response;
  std::exception_ptr failure;
  try {
    response = inner_.Complete(tag, prompt);
    rec["response"] = *response;
  } catch (const std::exception& e) {
    rec["response"] = nullptr;
    rec["error"] = e.what();
    failure = std::current_exception();
  }
  rec["finished_at"] = UtcTimestamp();
  {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << rec.dump() << "\n";
  }
  if (failure) std::rethrow_exception(failure);
  return *response;
}

}  // namespace tagood
