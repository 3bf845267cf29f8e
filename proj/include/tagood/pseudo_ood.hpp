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

#ifndef TAGOOD_PSEUDO_OOD_HPP_
#define TAGOOD_PSEUDO_OOD_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tagood/graph.hpp"
#include "tagood/label_space.hpp"

namespace tagood {

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

enum class PromptTemplate { kCora, kCiteseerGeneral, kWikiCs, kEleComputers };

std::string_view ToString(PromptTemplate t);
PromptTemplate ParsePromptTemplate(std::string_view s);

// Open-world annotation prompt for one node. An empty `dataset_blurb` uses the
// template's stock description; the citeseer_general template has none and
// only gains a description section when a blurb is given.
std::string RenderAnnotationPrompt(std::string_view node_text,
                                   const std::vector<std::string>& id_names,
                                   std::string_view dataset_blurb, PromptTemplate tmpl);

std::string RenderClusteringPrompt(const std::vector<std::string>& labels, std::size_t num_clusters,
                                   const std::vector<std::string>& id_names);

// Appended to a prompt whose answer could not be used.
std::string SingleLineReminder();
std::string ClusterFormatReminder(std::string_view problem);

// ---------------------------------------------------------------------------
// LLM clients
// ---------------------------------------------------------------------------

// One chat completion. `tag` names the call site ("annotate/17",
// "cluster/retry") and keys transcript replay together with the prompt hash.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string Complete(const std::string& tag, const std::string& prompt) = 0;
  // Whether Complete may be called from several threads at once.
  virtual bool concurrent() const { return false; }
};

struct LlmEndpoint {
  enum class Mode { kLive, kMock };

  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4o-mini";
  std::string api_key;
  double temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds min_request_interval{100};
  std::size_t max_concurrency = 4;
  std::size_t max_calls = 200;
  Mode mode = Mode::kLive;

  // Fills base_url/api_key from LLM_BASE_URL / LLM_API_KEY when set.
  void ApplyEnvironment();
  // Live mode needs a credential.
  void Validate() const;
};

// POST {base_url}/v1/chat/completions, with retries on transport errors, 429
// and 5xx, exponential backoff, a minimum spacing between request starts and
// a hard cap on total calls.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(LlmEndpoint endpoint);
  ~HttpLlmClient() override;

  std::string Complete(const std::string& tag, const std::string& prompt) override;
  bool concurrent() const override { return true; }
  std::size_t calls_made() const;

 private:
  struct State;
  LlmEndpoint endpoint_;
  std::unique_ptr<State> state_;
};

struct MockRule {
  std::string keyword;   // case-insensitive substring of the node text
  std::string response;  // the answer line
};

struct MockCluster {
  std::string name;
  std::string description;
  std::vector<std::string> members;
};

// Keyword -> answer table for offline runs. Unmatched annotation prompts answer
// with an ID name picked by hashing (seed, node text).
struct MockTable {
  std::uint64_t seed = 0;
  std::vector<MockRule> rules;
  std::vector<MockCluster> clusters;

  static MockTable FromJson(const nlohmann::json& doc);
  nlohmann::json ToJson() const;
  static MockTable Load(const std::filesystem::path& path);
};

class MockLlmClient : public LlmClient {
 public:
  explicit MockLlmClient(MockTable table) : table_(std::move(table)) {}
  std::string Complete(const std::string& tag, const std::string& prompt) override;

 private:
  std::string AnswerAnnotation(const std::string& prompt) const;
  std::string AnswerClustering(const std::string& prompt) const;
  MockTable table_;
};

// Serves recorded responses; never touches the network.
class ReplayLlmClient : public LlmClient {
 public:
  explicit ReplayLlmClient(const std::filesystem::path& transcript);
  std::string Complete(const std::string& tag, const std::string& prompt) override;
  bool concurrent() const override { return true; }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

// Appends one JSON line per completed call to `path` and forwards to `inner`.
class RecordingLlmClient : public LlmClient {
 public:
  RecordingLlmClient(LlmClient& inner, std::filesystem::path path, std::string model);
  std::string Complete(const std::string& tag, const std::string& prompt) override;
  bool concurrent() const override { return inner_.concurrent(); }

 private:
  LlmClient& inner_;
  std::filesystem::path path_;
  std::string model_;
  std::mutex mutex_;
};

// Pulls the node text and the ID class list back out of a rendered
// annotation prompt.
struct ParsedAnnotationPrompt {
  std::string node_text;
  std::vector<std::string> id_names;
};
std::optional<ParsedAnnotationPrompt> ParseAnnotationPrompt(std::string_view prompt);

// ---------------------------------------------------------------------------
// Annotation pipeline
// ---------------------------------------------------------------------------

struct MatchedId {
  std::size_t index = 0;  // position in the ID name list
  bool operator==(const MatchedId&) const = default;
};

struct GeneratedOod {
  std::string name;
  bool operator==(const GeneratedOod&) const = default;
};

using AnnotationDecision = std::variant<MatchedId, GeneratedOod>;

struct AnnotationRecord {
  NodeId node = 0;
  AnnotationDecision decision;
  std::string raw_response;
  std::string prompt_fingerprint;  // SHA-256 of the first prompt sent

  bool operator==(const AnnotationRecord&) const = default;

  nlohmann::json ToJson() const;
  static AnnotationRecord FromJson(const nlohmann::json& j);
};

// Uniform sample without replacement, returned ascending.
std::vector<NodeId> SampleAnnotationNodes(const TextAttributedGraph& g, std::size_t count,
                                          std::uint64_t seed);

// Sends `prompt`, re-prompting once on a multi-line answer. A cleaned answer
// whose NameKey equals an ID name's is a match; anything else is a generated
// OOD class name.
AnnotationRecord Annotate(LlmClient& client, NodeId node, const std::string& prompt,
                          const std::vector<std::string>& id_names);

// Annotates `nodes` (up to `concurrency` requests in flight when the client
// allows it). Output is ordered by node id.
std::vector<AnnotationRecord> AnnotateNodes(LlmClient& client, const TextAttributedGraph& g,
                                            const std::vector<NodeId>& nodes,
                                            const std::vector<std::string>& id_names,
                                            std::string_view dataset_blurb, PromptTemplate tmpl,
                                            std::size_t concurrency);

// Distinct generated names: case-insensitive dedup keeping the first
// spelling, ordered by frequency (descending) then NameKey.
std::vector<std::string> HarvestPseudoLabels(const std::vector<AnnotationRecord>& records);

struct LabelCluster {
  std::string name;
  std::string description;
  bool operator==(const LabelCluster&) const = default;
};

// Parses "name: description" lines (list markers and emphasis tolerated).
std::vector<LabelCluster> ParseClusterResponse(std::string_view response);

// Exactly `num_clusters` clusters, none named like an ID class. One re-prompt
// on a bad answer, then an error.
std::vector<LabelCluster> ClusterLabels(LlmClient& client, const std::vector<std::string>& labels,
                                        std::size_t num_clusters,
                                        const std::vector<std::string>& id_names);

using SentenceEncoder = std::function<EmbeddingMatrix(const std::vector<std::string>&)>;

struct PseudoLabelConfig {
  std::size_t annotation_count = 80;
  std::uint64_t seed = 0;  // root seed; stage seeds are derived from it
  PromptTemplate prompt = PromptTemplate::kCora;
  std::string dataset_blurb;
  std::optional<std::size_t> num_clusters;
  PseudoFilterOptions filter;  // filter.seed is overwritten by the derived stage seed
  std::size_t concurrency = 4;
};

struct PseudoLabelResult {
  std::vector<NodeId> sampled;
  std::vector<AnnotationRecord> records;
  std::vector<std::string> harvested;
  std::vector<LabelCluster> clusters;
  LabelSpace space;  // ID block of the input plus the kept generated labels
};

// sample -> prompt -> annotate -> harvest -> (cluster) -> embed -> filter.
PseudoLabelResult GeneratePseudoLabels(const TextAttributedGraph& g, const LabelSpace& base,
                                       LlmClient& client, const SentenceEncoder& encode,
                                       const PseudoLabelConfig& config);

}  // namespace tagood

#endif  // TAGOOD_PSEUDO_OOD_HPP_
